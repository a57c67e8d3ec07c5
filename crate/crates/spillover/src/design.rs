//! Treatment assignment designs: complete randomization, Bernoulli
//! assignment, exhaustive support enumeration, graph-cluster randomization
//! over an ε-net partition, and two-stage saturation designs.
//!
//! Every generator is a pure function of its parameters and seed, so
//! concurrent workers with distinct seeds are safe.

use rand::seq::SliceRandom;
use rand::Rng;
use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::netgraph::Graph;
use crate::stats::{binomial, round_half_even, stream_rng};

/// Default cap on the enumerated support size.
pub const ENUMERATION_CAP: u128 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DesignKind {
    Complete,
    Bernoulli,
    Cluster,
    Enumerated,
}

/// A batch of binary assignment vectors drawn from (or enumerating) a design.
#[derive(Debug, Clone)]
pub struct AssignmentSet {
    pub n: usize,
    pub vectors: Vec<Vec<u8>>,
    pub design_kind: DesignKind,
    /// Treated share (complete designs) or Bernoulli probability.
    pub p: f64,
    /// Vectors were drawn without repetition (always true when enumerated).
    pub distinct: bool,
}

impl AssignmentSet {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

/// Complete randomization: each vector treats exactly `round(p*n)` units,
/// uniformly over the `C(n, round(p*n))` support.
pub fn complete_randomization(
    n: usize,
    p: f64,
    r: usize,
    seed: u64,
    allow_repetitions: bool,
) -> Result<AssignmentSet> {
    if !(0.0..1.0).contains(&p) || p == 0.0 {
        return Err(Error::Parameter(format!("treated share must be in (0,1), got {p}")));
    }
    let treated = round_half_even(p * n as f64);
    if treated == 0 {
        return Err(Error::Parameter(format!(
            "round(p*n) = 0 treated units for p={p}, n={n}"
        )));
    }
    if treated >= n {
        return Err(Error::Parameter(format!(
            "round(p*n) = {treated} leaves no control units for p={p}, n={n}"
        )));
    }
    if !allow_repetitions {
        let support = binomial(n, treated);
        if (r as u128) > support {
            return Err(Error::Parameter(format!(
                "{r} distinct vectors requested but the support holds only {support}"
            )));
        }
    }

    let mut rng = stream_rng(seed, 0xc0de);
    let mut vectors = Vec::with_capacity(r);
    let mut seen: HashSet<Vec<u8>> = HashSet::new();
    while vectors.len() < r {
        let picks = rand::seq::index::sample(&mut rng, n, treated);
        let mut z = vec![0u8; n];
        for unit in picks {
            z[unit] = 1;
        }
        if !allow_repetitions && !seen.insert(z.clone()) {
            continue;
        }
        vectors.push(z);
    }
    Ok(AssignmentSet {
        n,
        vectors,
        design_kind: DesignKind::Complete,
        p,
        distinct: !allow_repetitions,
    })
}

/// Bernoulli assignment: every entry is an independent coin with bias `p`.
pub fn bernoulli_assignment(n: usize, p: f64, r: usize, seed: u64) -> Result<AssignmentSet> {
    if !(0.0..=1.0).contains(&p) || p == 0.0 || p == 1.0 {
        return Err(Error::Parameter(format!("Bernoulli probability must be in (0,1), got {p}")));
    }
    let mut rng = stream_rng(seed, 0xbe52);
    let vectors = (0..r)
        .map(|_| (0..n).map(|_| u8::from(rng.gen_bool(p))).collect())
        .collect();
    Ok(AssignmentSet {
        n,
        vectors,
        design_kind: DesignKind::Bernoulli,
        p,
        distinct: false,
    })
}

/// All assignment vectors of the complete-randomization design, each
/// implicitly carrying probability `1 / |support|`.
pub fn enumerate_support(n: usize, p: f64) -> Result<AssignmentSet> {
    enumerate_support_capped(n, p, ENUMERATION_CAP)
}

pub fn enumerate_support_capped(n: usize, p: f64, cap: u128) -> Result<AssignmentSet> {
    if !(0.0..1.0).contains(&p) || p == 0.0 {
        return Err(Error::Parameter(format!("treated share must be in (0,1), got {p}")));
    }
    let treated = round_half_even(p * n as f64);
    if treated == 0 || treated >= n {
        return Err(Error::Parameter(format!(
            "round(p*n) = {treated} is degenerate for p={p}, n={n}"
        )));
    }
    let support = binomial(n, treated);
    if support > cap {
        return Err(Error::Parameter(format!(
            "support size {support} exceeds the cap of {cap}; draw Monte Carlo \
             replicates instead of enumerating"
        )));
    }

    // Lexicographic combinations of `treated` indices out of n.
    let mut vectors = Vec::with_capacity(support as usize);
    let mut combo: Vec<usize> = (0..treated).collect();
    loop {
        let mut z = vec![0u8; n];
        for &unit in &combo {
            z[unit] = 1;
        }
        vectors.push(z);

        // Advance to the next combination, rightmost movable element first.
        let mut slot = treated;
        while slot > 0 {
            slot -= 1;
            if combo[slot] != slot + n - treated {
                combo[slot] += 1;
                for later in (slot + 1)..treated {
                    combo[later] = combo[later - 1] + 1;
                }
                break;
            }
            if slot == 0 {
                return Ok(AssignmentSet {
                    n,
                    vectors,
                    design_kind: DesignKind::Enumerated,
                    p,
                    distinct: true,
                });
            }
        }
    }
}

/// A partition of units into clusters around a set of center units.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Clustering {
    /// Cluster id for every unit; ids index `centers`.
    pub labels: Vec<usize>,
    /// One unit per cluster; each center labels itself.
    pub centers: Vec<usize>,
}

impl Clustering {
    pub fn cluster_count(&self) -> usize {
        self.centers.len()
    }

    /// Unit ids gathered per cluster.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.centers.len()];
        for (unit, &cluster) in self.labels.iter().enumerate() {
            out[cluster].push(unit);
        }
        out
    }

    /// Build directly from unit labels (testing and degenerate partitions).
    pub fn from_labels(labels: Vec<usize>, centers: Vec<usize>) -> Result<Self> {
        for (unit, &c) in labels.iter().enumerate() {
            if c >= centers.len() {
                return Err(Error::Integrity(format!("unit {unit} labeled with unknown cluster {c}")));
            }
        }
        for (cluster, &center) in centers.iter().enumerate() {
            if labels.get(center) != Some(&cluster) {
                return Err(Error::Integrity(format!(
                    "center {center} does not label itself with cluster {cluster}"
                )));
            }
        }
        Ok(Clustering { labels, centers })
    }
}

/// Greedy ε-net clustering with a seed-shuffled scan order.
///
/// Builds a maximal set of centers with pairwise shortest-path distance
/// >= epsilon; maximality leaves every other unit within epsilon-1 hops of
/// > some center. Units attach to their nearest center, ties broken by the
/// > lowest center unit id. Connected components are handled independently
/// > because cross-component distances are infinite.
pub fn epsilon_net_clustering(g: &Graph, epsilon: usize, seed: u64) -> Result<Clustering> {
    let mut order: Vec<usize> = (0..g.unit_count()).collect();
    order.shuffle(&mut stream_rng(seed, 0xe75c));
    epsilon_net_with_order(g, epsilon, &order)
}

/// ε-net clustering with an explicit greedy scan order.
pub fn epsilon_net_with_order(g: &Graph, epsilon: usize, order: &[usize]) -> Result<Clustering> {
    let n = g.unit_count();
    if epsilon == 0 {
        return Err(Error::Parameter("epsilon must be >= 1".into()));
    }
    if order.len() != n {
        return Err(Error::Parameter(format!(
            "scan order covers {} units, graph has {n}",
            order.len()
        )));
    }

    // dist_to_net[u] = shortest distance from u to any accepted center.
    let mut dist_to_net = vec![usize::MAX; n];
    let mut centers = Vec::new();
    for &candidate in order {
        if dist_to_net[candidate] < epsilon {
            continue;
        }
        centers.push(candidate);
        for (unit, d) in g.bfs_distances(candidate).into_iter().enumerate() {
            if d < dist_to_net[unit] {
                dist_to_net[unit] = d;
            }
        }
    }
    centers.sort_unstable();

    // Nearest-center assignment; ties go to the lowest center unit id,
    // which the ascending scan handles for free.
    let mut best_dist = vec![usize::MAX; n];
    let mut labels = vec![usize::MAX; n];
    for (cluster, &center) in centers.iter().enumerate() {
        for (unit, d) in g.bfs_distances(center).into_iter().enumerate() {
            if d < best_dist[unit] {
                best_dist[unit] = d;
                labels[unit] = cluster;
            }
        }
    }
    Clustering::from_labels(labels, centers)
}

/// How cluster-level treatment is drawn in a cluster-randomized design.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClusterDesign {
    /// Independent coin per cluster (the default).
    Bernoulli,
    /// Exactly `round(p * clusters)` treated clusters per draw.
    Complete,
}

/// Draw cluster-level assignments and propagate each cluster's bit to all
/// of its member units.
pub fn cluster_randomization(
    clustering: &Clustering,
    p: f64,
    r: usize,
    seed: u64,
    mode: ClusterDesign,
) -> Result<AssignmentSet> {
    let c = clustering.cluster_count();
    let n = clustering.labels.len();
    let cluster_draws = match mode {
        ClusterDesign::Bernoulli => bernoulli_assignment(c, p, r, seed)?,
        ClusterDesign::Complete => complete_randomization(c, p, r, seed, true)?,
    };
    let vectors = cluster_draws
        .vectors
        .iter()
        .map(|bits| clustering.labels.iter().map(|&cl| bits[cl]).collect())
        .collect();
    Ok(AssignmentSet {
        n,
        vectors,
        design_kind: DesignKind::Cluster,
        p,
        distinct: false,
    })
}

/// One realized two-stage (saturation) assignment.
#[derive(Debug, Clone)]
pub struct HierarchicalAssignment {
    /// Group id per unit.
    pub group_of: Vec<usize>,
    /// True when the group sits in the ψ arm.
    pub group_in_psi_arm: Vec<bool>,
    /// Unit-level assignment bits.
    pub z: Vec<u8>,
    pub psi: f64,
    pub phi: f64,
}

impl HierarchicalAssignment {
    pub fn group_count(&self) -> usize {
        self.group_in_psi_arm.len()
    }

    /// Realized saturation of the arm a group sits in.
    pub fn saturation_of_group(&self, group: usize) -> f64 {
        if self.group_in_psi_arm[group] {
            self.psi
        } else {
            self.phi
        }
    }
}

/// Two-stage saturation design: stage 1 assigns `round(share_psi * G)`
/// groups to the ψ arm by complete randomization over groups; stage 2 runs
/// complete randomization within each group at its arm's saturation.
pub fn two_stage_assignment(
    group_of: &[usize],
    psi: f64,
    phi: f64,
    share_psi: f64,
    seed: u64,
) -> Result<HierarchicalAssignment> {
    if group_of.is_empty() {
        return Err(Error::Parameter("no units supplied".into()));
    }
    for &sat in &[psi, phi] {
        if !(0.0..=1.0).contains(&sat) {
            return Err(Error::Parameter(format!("saturation must be in [0,1], got {sat}")));
        }
    }
    let group_count = group_of.iter().copied().max().unwrap() + 1;
    let mut sizes = vec![0usize; group_count];
    for &gid in group_of {
        sizes[gid] += 1;
    }
    if sizes.contains(&0) {
        return Err(Error::Parameter("group ids must be contiguous from 0".into()));
    }
    let psi_groups = round_half_even(share_psi * group_count as f64);
    if psi_groups == 0 || psi_groups >= group_count {
        return Err(Error::Parameter(format!(
            "share_psi={share_psi} leaves an empty arm across {group_count} groups"
        )));
    }
    // Estimators need a treated and a control cell in every group.
    for (gid, &size) in sizes.iter().enumerate() {
        for (arm, sat) in [("psi", psi), ("phi", phi)] {
            let treated = round_half_even(sat * size as f64);
            if treated == 0 || treated == size {
                return Err(Error::Parameter(format!(
                    "group {gid} (size {size}) would have no {} units in the {arm} arm",
                    if treated == 0 { "treated" } else { "control" }
                )));
            }
        }
    }

    let mut rng = stream_rng(seed, 0x25a6);

    // Stage 1: which groups get the psi saturation.
    let mut group_ids: Vec<usize> = (0..group_count).collect();
    group_ids.shuffle(&mut rng);
    let mut group_in_psi_arm = vec![false; group_count];
    for &gid in group_ids.iter().take(psi_groups) {
        group_in_psi_arm[gid] = true;
    }

    // Stage 2: complete randomization within each group.
    let mut members = vec![Vec::new(); group_count];
    for (unit, &gid) in group_of.iter().enumerate() {
        members[gid].push(unit);
    }
    let mut z = vec![0u8; group_of.len()];
    for gid in 0..group_count {
        let sat = if group_in_psi_arm[gid] { psi } else { phi };
        let treated = round_half_even(sat * sizes[gid] as f64);
        let mut units = members[gid].clone();
        units.shuffle(&mut rng);
        for &unit in units.iter().take(treated) {
            z[unit] = 1;
        }
    }

    Ok(HierarchicalAssignment {
        group_of: group_of.to_vec(),
        group_in_psi_arm,
        z,
        psi,
        phi,
    })
}
