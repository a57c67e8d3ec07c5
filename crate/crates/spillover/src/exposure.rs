//! Exposure mappings and generalized exposure probabilities.
//!
//! An exposure mapping turns a full assignment vector plus a unit's network
//! position into one of K discrete exposure conditions. Individual and
//! joint condition probabilities under a design are tallied over an
//! `AssignmentSet`: exact when the set enumerates the support, Monte Carlo
//! otherwise. Accumulation is integer tallies divided once at the end, so
//! sharded workers reproduce the sequential result bit for bit.

use rayon::prelude::*;

use crate::design::AssignmentSet;
use crate::error::{Error, Result};
use crate::netgraph::Graph;

/// Which pattern of treatment counts as exposure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MappingKind {
    /// Own assignment only: conditions (d1, d0).
    NoInterference,
    /// Own assignment and any directly-treated peer: four conditions.
    Hop1,
    /// Own assignment, any treated peer, and any treated unit at network
    /// distance exactly two: eight conditions.
    Hop2,
    /// Closed-neighborhood saturation: fully treated, fully untreated,
    /// or mixed. Used for cluster-randomization contrasts.
    FullNeighborhood,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExposureMappingSpec {
    pub kind: MappingKind,
}

const NONE_LABELS: [&str; 2] = ["d1", "d0"];
const HOP1_LABELS: [&str; 4] = ["dir_ind1", "isol_dir", "ind1", "no"];
const HOP2_LABELS: [&str; 8] = [
    "d111", "d110", "d101", "d100", "d011", "d010", "d001", "d000",
];
const FULL_LABELS: [&str; 3] = ["all_1", "mixed", "all_0"];

impl ExposureMappingSpec {
    pub fn no_interference() -> Self {
        Self { kind: MappingKind::NoInterference }
    }

    pub fn hop1() -> Self {
        Self { kind: MappingKind::Hop1 }
    }

    pub fn hop2() -> Self {
        Self { kind: MappingKind::Hop2 }
    }

    pub fn full_neighborhood() -> Self {
        Self { kind: MappingKind::FullNeighborhood }
    }

    pub fn condition_count(&self) -> usize {
        match self.kind {
            MappingKind::NoInterference => 2,
            MappingKind::Hop1 => 4,
            MappingKind::Hop2 => 8,
            MappingKind::FullNeighborhood => 3,
        }
    }

    pub fn labels(&self) -> &'static [&'static str] {
        match self.kind {
            MappingKind::NoInterference => &NONE_LABELS,
            MappingKind::Hop1 => &HOP1_LABELS,
            MappingKind::Hop2 => &HOP2_LABELS,
            MappingKind::FullNeighborhood => &FULL_LABELS,
        }
    }

    pub fn label(&self, condition: usize) -> &'static str {
        self.labels()[condition]
    }

    pub fn condition_of_label(&self, label: &str) -> Option<usize> {
        self.labels().iter().position(|&l| l == label)
    }

    /// The everyone-treated condition (first index).
    pub fn top_condition(&self) -> usize {
        0
    }

    /// The all-zero condition (last index).
    pub fn baseline_condition(&self) -> usize {
        self.condition_count() - 1
    }

    /// Rungs of the no-interference / hop1 / hop2 ladder; the
    /// full-neighborhood mapping sits outside it.
    pub fn hop_level(&self) -> Option<u8> {
        match self.kind {
            MappingKind::NoInterference => Some(0),
            MappingKind::Hop1 => Some(1),
            MappingKind::Hop2 => Some(2),
            MappingKind::FullNeighborhood => None,
        }
    }
}

/// Realized exposure condition per unit under one assignment vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExposureMatrix {
    pub spec: ExposureMappingSpec,
    /// Condition index per unit; exactly one condition per unit, which is
    /// the row-sums-to-one invariant of the one-hot form.
    pub conditions: Vec<usize>,
}

impl ExposureMatrix {
    pub fn n(&self) -> usize {
        self.conditions.len()
    }

    pub fn condition(&self, unit: usize) -> usize {
        self.conditions[unit]
    }

    pub fn indicator(&self, unit: usize, condition: usize) -> bool {
        self.conditions[unit] == condition
    }

    pub fn units_in(&self, condition: usize) -> Vec<usize> {
        (0..self.n()).filter(|&u| self.conditions[u] == condition).collect()
    }

    pub fn count(&self, condition: usize) -> usize {
        self.conditions.iter().filter(|&&c| c == condition).count()
    }
}

/// Precomputed per-graph state for repeatedly mapping assignment vectors.
pub struct ExposureMapper<'g> {
    graph: &'g Graph,
    spec: ExposureMappingSpec,
    /// Distance-exactly-2 sets, built only for hop-2 mappings.
    second_degree: Option<Vec<Vec<usize>>>,
}

impl<'g> ExposureMapper<'g> {
    pub fn new(graph: &'g Graph, spec: ExposureMappingSpec) -> Self {
        let second_degree = matches!(spec.kind, MappingKind::Hop2).then(|| {
            (0..graph.unit_count()).map(|u| graph.second_degree_set(u)).collect()
        });
        ExposureMapper { graph, spec, second_degree }
    }

    pub fn spec(&self) -> ExposureMappingSpec {
        self.spec
    }

    pub fn map(&self, z: &[u8]) -> Result<ExposureMatrix> {
        let n = self.graph.unit_count();
        if z.len() != n {
            return Err(Error::Parameter(format!(
                "assignment length {} does not match {} units",
                z.len(),
                n
            )));
        }
        let conditions = (0..n).map(|u| self.condition_of(z, u)).collect();
        Ok(ExposureMatrix { spec: self.spec, conditions })
    }

    fn condition_of(&self, z: &[u8], unit: usize) -> usize {
        let own = z[unit] as usize;
        match self.spec.kind {
            MappingKind::NoInterference => 1 - own,
            MappingKind::Hop1 => {
                let peer = usize::from(self.any_treated(self.graph.neighbors(unit), z));
                3 - (own * 2 + peer)
            }
            MappingKind::Hop2 => {
                let peer = usize::from(self.any_treated(self.graph.neighbors(unit), z));
                let two = usize::from(
                    self.any_treated(&self.second_degree.as_ref().unwrap()[unit], z),
                );
                7 - (own * 4 + peer * 2 + two)
            }
            MappingKind::FullNeighborhood => {
                let peers = self.graph.neighbors(unit);
                if own == 1 && peers.iter().all(|&p| z[p] == 1) {
                    0
                } else if own == 0 && peers.iter().all(|&p| z[p] == 0) {
                    2
                } else {
                    1
                }
            }
        }
    }

    fn any_treated(&self, units: &[usize], z: &[u8]) -> bool {
        units.iter().any(|&u| z[u] == 1)
    }
}

/// Map one assignment vector to per-unit exposure conditions.
pub fn map_exposures(g: &Graph, z: &[u8], spec: ExposureMappingSpec) -> Result<ExposureMatrix> {
    ExposureMapper::new(g, spec).map(z)
}

/// Individual and joint exposure-condition probabilities under a design.
///
/// Probabilities are stored as integer tallies over the replicate set and
/// divided on access, so `individual(c, i)` is an exact zero whenever the
/// condition never occurred for the unit.
#[derive(Debug, Clone)]
pub struct ExposureProbabilities {
    pub spec: ExposureMappingSpec,
    pub n: usize,
    /// Replicates tallied (the support size in exact mode).
    pub replicates: usize,
    /// True when tallied over the full enumerated support.
    pub exact: bool,
    individual_counts: Vec<u32>,
    joint_counts: Option<Vec<u32>>,
    /// Per (condition, unit): how many j != i have zero joint probability
    /// of sharing the condition, i.e. the pairs needing the variance correction.
    zero_pair_counts: Option<Vec<u32>>,
    inv_r: f64,
}

impl ExposureProbabilities {
    pub fn condition_count(&self) -> usize {
        self.spec.condition_count()
    }

    pub fn individual(&self, condition: usize, unit: usize) -> f64 {
        self.individual_counts[condition * self.n + unit] as f64 * self.inv_r
    }

    pub fn individual_count(&self, condition: usize, unit: usize) -> u32 {
        self.individual_counts[condition * self.n + unit]
    }

    pub fn has_joint(&self) -> bool {
        self.joint_counts.is_some()
    }

    /// Joint probability that unit `i` lands in `ck` while `j` lands in `cl`.
    pub fn joint(&self, ck: usize, cl: usize, i: usize, j: usize) -> f64 {
        self.joint_count(ck, cl, i, j) as f64 * self.inv_r
    }

    pub fn joint_count(&self, ck: usize, cl: usize, i: usize, j: usize) -> u32 {
        let k = self.condition_count();
        let counts = self.joint_counts.as_ref().expect("joint probabilities not tallied");
        counts[((ck * k + cl) * self.n + i) * self.n + j]
    }

    /// Row slice of joint counts: all `j` paired with a fixed `i`.
    pub(crate) fn joint_row(&self, ck: usize, cl: usize, i: usize) -> &[u32] {
        let k = self.condition_count();
        let counts = self.joint_counts.as_ref().expect("joint probabilities not tallied");
        let base = ((ck * k + cl) * self.n + i) * self.n;
        &counts[base..base + self.n]
    }

    pub fn zero_pair_count(&self, condition: usize, unit: usize) -> u32 {
        self.zero_pair_counts.as_ref().expect("joint probabilities not tallied")
            [condition * self.n + unit]
    }

    pub(crate) fn inv_r(&self) -> f64 {
        self.inv_r
    }

    /// Assemble from raw tallies (test scaffolding and file import).
    pub fn from_counts(
        spec: ExposureMappingSpec,
        n: usize,
        replicates: usize,
        exact: bool,
        individual_counts: Vec<u32>,
        joint_counts: Option<Vec<u32>>,
    ) -> Result<Self> {
        let k = spec.condition_count();
        if individual_counts.len() != k * n {
            return Err(Error::Parameter("individual tally shape mismatch".into()));
        }
        if let Some(j) = &joint_counts {
            if j.len() != k * k * n * n {
                return Err(Error::Parameter("joint tally shape mismatch".into()));
            }
        }
        let zero_pair_counts = joint_counts.as_ref().map(|counts| {
            let mut zeros = vec![0u32; k * n];
            for c in 0..k {
                for i in 0..n {
                    let base = ((c * k + c) * n + i) * n;
                    let row = &counts[base..base + n];
                    let z = row
                        .iter()
                        .enumerate()
                        .filter(|&(j, &cnt)| j != i && cnt == 0)
                        .count();
                    zeros[c * n + i] = z as u32;
                }
            }
            zeros
        });
        Ok(ExposureProbabilities {
            spec,
            n,
            replicates,
            exact,
            individual_counts,
            joint_counts,
            zero_pair_counts,
            inv_r: 1.0 / replicates as f64,
        })
    }
}

/// Tally exposure probabilities for every unit over an assignment set.
///
/// Exact when `assignments` enumerates the design's support; otherwise a
/// Monte Carlo estimate over the supplied replicates. Joint tallies are
/// required by the variance estimators and cost K²n² memory when requested.
pub fn exposure_probabilities(
    g: &Graph,
    assignments: &AssignmentSet,
    spec: ExposureMappingSpec,
    want_joint: bool,
) -> Result<ExposureProbabilities> {
    if assignments.n != g.unit_count() {
        return Err(Error::Parameter(format!(
            "assignment set covers {} units, graph has {}",
            assignments.n,
            g.unit_count()
        )));
    }
    if assignments.is_empty() {
        return Err(Error::Parameter("assignment set is empty".into()));
    }

    let n = g.unit_count();
    let k = spec.condition_count();
    let mapper = ExposureMapper::new(g, spec);
    let exact = assignments.design_kind == crate::design::DesignKind::Enumerated;

    let shards = rayon::current_num_threads().max(1);
    let chunk = assignments.vectors.len().div_ceil(shards);
    let tally = assignments
        .vectors
        .par_chunks(chunk.max(1))
        .map(|vectors| {
            let mut individual = vec![0u32; k * n];
            let mut joint = want_joint.then(|| vec![0u32; k * k * n * n]);
            let mut conditions = vec![0usize; n];
            for z in vectors {
                for (unit, slot) in conditions.iter_mut().enumerate() {
                    *slot = mapper.condition_of(z, unit);
                }
                for (unit, &c) in conditions.iter().enumerate() {
                    individual[c * n + unit] += 1;
                }
                if let Some(joint) = joint.as_mut() {
                    for (i, &ci) in conditions.iter().enumerate() {
                        let row = ci * k;
                        for (j, &cj) in conditions.iter().enumerate() {
                            joint[((row + cj) * n + i) * n + j] += 1;
                        }
                    }
                }
            }
            (individual, joint)
        })
        .reduce(
            || (vec![0u32; k * n], want_joint.then(|| vec![0u32; k * k * n * n])),
            |(mut ia, ja), (ib, jb)| {
                for (a, b) in ia.iter_mut().zip(ib) {
                    *a += b;
                }
                let joint = match (ja, jb) {
                    (Some(mut a), Some(b)) => {
                        for (x, y) in a.iter_mut().zip(b) {
                            *x += y;
                        }
                        Some(a)
                    }
                    (a, None) => a,
                    (None, b) => b,
                };
                (ia, joint)
            },
        );

    ExposureProbabilities::from_counts(
        spec,
        n,
        assignments.len(),
        exact,
        tally.0,
        tally.1,
    )
}

/// Correspondence between the conditions of two mappings on the
/// no-interference / hop1 / hop2 ladder.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConditionMergeMap {
    /// True when the true mapping is the finer one (coarse analysis).
    pub finer_is_true: bool,
    /// Condition index in the finer mapping -> index in the coarser one.
    pub finer_to_coarser: Vec<usize>,
    pub identity: bool,
}

impl ConditionMergeMap {
    /// Finer conditions pooled into one coarser condition.
    pub fn finer_of(&self, coarser: usize) -> Vec<usize> {
        self.finer_to_coarser
            .iter()
            .enumerate()
            .filter(|&(_, &c)| c == coarser)
            .map(|(f, _)| f)
            .collect()
    }
}

/// Relate the conditions a data-generating mapping distinguishes to the
/// conditions an analyst assumes. Coarsening drops trailing hop indicators;
/// refinement is the reverse correspondence.
pub fn misspecify(
    spec_true: ExposureMappingSpec,
    spec_assumed: ExposureMappingSpec,
) -> Result<ConditionMergeMap> {
    let (true_level, assumed_level) = match (spec_true.hop_level(), spec_assumed.hop_level()) {
        (Some(t), Some(a)) => (t, a),
        _ => {
            return Err(Error::Parameter(
                "condition merging is defined on the no-interference/hop1/hop2 ladder".into(),
            ))
        }
    };
    let (finer, coarser, finer_is_true) = if true_level >= assumed_level {
        (spec_true, spec_assumed, true)
    } else {
        (spec_assumed, spec_true, false)
    };
    let shift = finer.hop_level().unwrap() - coarser.hop_level().unwrap();
    let k_f = finer.condition_count();
    let k_c = coarser.condition_count();
    let finer_to_coarser = (0..k_f)
        .map(|idx| {
            let bits = (k_f - 1) - idx;
            (k_c - 1) - (bits >> shift)
        })
        .collect();
    Ok(ConditionMergeMap {
        finer_is_true,
        finer_to_coarser,
        identity: shift == 0,
    })
}
