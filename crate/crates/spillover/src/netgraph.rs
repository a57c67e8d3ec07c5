//! The interference network: construction, perturbation, traversal, and
//! file round-trips.
//!
//! A [`Graph`] is an undirected, unweighted, irreflexive network over units
//! `0..n`. It is immutable after construction, so shared concurrent reads
//! are safe.

use std::collections::{BTreeSet, VecDeque};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::stats::stream_rng;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    /// Unordered edges stored as (u, v) with u < v, sorted.
    edges: Vec<(usize, usize)>,
    /// Adjacency lists, each sorted ascending.
    neighbors: Vec<Vec<usize>>,
}

impl Graph {
    /// Build a graph from unordered unit pairs, validating all invariants.
    pub fn from_edges(n: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut set = BTreeSet::new();
        for (a, b) in pairs {
            if a == b {
                return Err(Error::Integrity(format!("self-loop on unit {a}")));
            }
            if a >= n || b >= n {
                return Err(Error::Integrity(format!(
                    "edge ({a},{b}) references a unit outside 0..{n}"
                )));
            }
            set.insert((a.min(b), a.max(b)));
        }
        let edges: Vec<(usize, usize)> = set.into_iter().collect();
        let mut neighbors = vec![Vec::new(); n];
        for &(u, v) in &edges {
            neighbors[u].push(v);
            neighbors[v].push(u);
        }
        for list in &mut neighbors {
            list.sort_unstable();
        }
        Ok(Graph { n, edges, neighbors })
    }

    pub fn unit_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, unit: usize) -> &[usize] {
        &self.neighbors[unit]
    }

    pub fn degree(&self, unit: usize) -> usize {
        self.neighbors[unit].len()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.neighbors[a].binary_search(&b).is_ok()
    }

    /// BFS distances from `source`; unreachable units get `usize::MAX`.
    pub fn bfs_distances(&self, source: usize) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.n];
        dist[source] = 0;
        let mut queue = VecDeque::from([source]);
        while let Some(u) = queue.pop_front() {
            let next = dist[u] + 1;
            for &v in &self.neighbors[u] {
                if dist[v] == usize::MAX {
                    dist[v] = next;
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// Units at shortest-path distance exactly 2 from `unit`
    /// (excludes the unit itself and its direct peers).
    pub fn second_degree_set(&self, unit: usize) -> Vec<usize> {
        assert!(unit < self.n, "unit {unit} out of range");
        let mut out = BTreeSet::new();
        for &peer in &self.neighbors[unit] {
            for &two in &self.neighbors[peer] {
                if two != unit && !self.has_edge(unit, two) {
                    out.insert(two);
                }
            }
        }
        out.into_iter().collect()
    }

    /// Remove `round(proportion * |edges|)` edges uniformly without
    /// replacement; the input graph is unchanged.
    pub fn remove_ties(&self, proportion: f64, seed: u64) -> Result<Graph> {
        if !(0.0..=1.0).contains(&proportion) {
            return Err(Error::Parameter(format!(
                "tie-removal proportion must be in [0,1], got {proportion}"
            )));
        }
        let drop = crate::stats::round_half_even(proportion * self.edges.len() as f64);
        let mut rng = stream_rng(seed, 0x7ee5);
        let mut order: Vec<usize> = (0..self.edges.len()).collect();
        order.shuffle(&mut rng);
        let dropped: BTreeSet<usize> = order.into_iter().take(drop).collect();
        let kept = self
            .edges
            .iter()
            .enumerate()
            .filter(|(i, _)| !dropped.contains(i))
            .map(|(_, &e)| e);
        Graph::from_edges(self.n, kept)
    }
}

/// Generate a small-world graph: ring lattice with `mean_degree / 2`
/// neighbors on each side, then each lattice edge independently rewired
/// with probability `rewire_prob` to a uniformly random endpoint.
/// Rewires that would create a self-loop or duplicate edge are re-drawn,
/// so the edge count is exactly `n * mean_degree / 2` for every seed.
pub fn generate_small_world(
    n: usize,
    mean_degree: usize,
    rewire_prob: f64,
    seed: u64,
) -> Result<Graph> {
    if !mean_degree.is_multiple_of(2) {
        return Err(Error::Parameter(format!(
            "mean_degree must be even, got {mean_degree}"
        )));
    }
    if mean_degree >= n {
        return Err(Error::Parameter(format!(
            "mean_degree {mean_degree} must be < n = {n}"
        )));
    }
    if !(0.0..=1.0).contains(&rewire_prob) {
        return Err(Error::Parameter(format!(
            "rewire_prob must be in [0,1], got {rewire_prob}"
        )));
    }

    let half = mean_degree / 2;
    let mut present: BTreeSet<(usize, usize)> = BTreeSet::new();
    let key = |a: usize, b: usize| (a.min(b), a.max(b));
    for u in 0..n {
        for j in 1..=half {
            present.insert(key(u, (u + j) % n));
        }
    }

    let mut rng = stream_rng(seed, 0x5a11);
    if rewire_prob > 0.0 {
        // Classic scan order: ring distance first, then unit.
        for j in 1..=half {
            for u in 0..n {
                let old = key(u, (u + j) % n);
                if !present.contains(&old) || !rng.gen_bool(rewire_prob) {
                    continue;
                }
                // A unit adjacent to everyone has no legal rewire target.
                let degree_u = present.iter().filter(|&&(a, b)| a == u || b == u).count();
                if degree_u >= n - 1 {
                    continue;
                }
                let new = loop {
                    let w = rng.gen_range(0..n);
                    if w != u && !present.contains(&key(u, w)) {
                        break key(u, w);
                    }
                };
                present.remove(&old);
                present.insert(new);
            }
        }
    }
    Graph::from_edges(n, present)
}

/// Write the edge-list form: a `# n=<count>` marker, a `u,v` header, then
/// one `u,v` row per edge with u < v.
pub fn save_graph(graph: &Graph, path: impl AsRef<Path>) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "# n={}", graph.n)?;
    writeln!(out, "u,v")?;
    for &(u, v) in &graph.edges {
        writeln!(out, "{u},{v}")?;
    }
    Ok(())
}

/// Write the dense form: n rows of n comma-separated 0/1 values.
pub fn save_graph_dense(graph: &Graph, path: impl AsRef<Path>) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    for i in 0..graph.n {
        let row: Vec<&str> = (0..graph.n)
            .map(|j| if graph.has_edge(i, j) { "1" } else { "0" })
            .collect();
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

/// Load either format. A `u,v` header selects the edge list; otherwise the
/// file is read as a dense 0/1 matrix that must be symmetric with a zero
/// diagonal. Errors name the offending 1-based line.
pub fn load_graph(path: impl AsRef<Path>) -> Result<Graph> {
    let reader = BufReader::new(std::fs::File::open(path)?);
    let mut lines = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        lines.push((idx + 1, line?));
    }

    let mut declared_n: Option<usize> = None;
    let mut body = Vec::new();
    for (lineno, raw) in lines {
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix('#') {
            let rest = rest.trim();
            if let Some(value) = rest.strip_prefix("n=") {
                declared_n = Some(value.trim().parse().map_err(|_| {
                    Error::parse(lineno, format!("invalid unit count in '{trimmed}'"))
                })?);
            }
            continue;
        }
        body.push((lineno, trimmed.to_string()));
    }

    if body.first().map(|(_, l)| l.as_str()) == Some("u,v") {
        load_edge_list(declared_n, &body[1..])
    } else {
        load_dense(&body)
    }
}

fn load_edge_list(declared_n: Option<usize>, rows: &[(usize, String)]) -> Result<Graph> {
    let mut pairs = Vec::with_capacity(rows.len());
    let mut max_id = 0usize;
    for (lineno, row) in rows {
        let mut it = row.split(',');
        let (a, b) = match (it.next(), it.next(), it.next()) {
            (Some(a), Some(b), None) => (a.trim(), b.trim()),
            _ => return Err(Error::parse(*lineno, format!("expected 'u,v', got '{row}'"))),
        };
        let u: usize = a
            .parse()
            .map_err(|_| Error::parse(*lineno, format!("invalid unit id '{a}'")))?;
        let v: usize = b
            .parse()
            .map_err(|_| Error::parse(*lineno, format!("invalid unit id '{b}'")))?;
        if u >= v {
            return Err(Error::parse(*lineno, format!("edge rows require u < v, got {u},{v}")));
        }
        if let Some(n) = declared_n {
            if v >= n {
                return Err(Error::parse(*lineno, format!("unit id {v} >= declared n = {n}")));
            }
        }
        max_id = max_id.max(v);
        pairs.push((u, v));
    }
    let n = declared_n.unwrap_or(if pairs.is_empty() { 0 } else { max_id + 1 });
    Graph::from_edges(n, pairs)
}

#[allow(clippy::needless_range_loop)]
fn load_dense(rows: &[(usize, String)]) -> Result<Graph> {
    let n = rows.len();
    let mut matrix = vec![vec![0u8; n]; n];
    for (i, (lineno, row)) in rows.iter().enumerate() {
        let cells: Vec<&str> = row.split(',').map(str::trim).collect();
        if cells.len() != n {
            return Err(Error::parse(
                *lineno,
                format!("expected {n} columns (one per row), got {}", cells.len()),
            ));
        }
        for (j, cell) in cells.iter().enumerate() {
            matrix[i][j] = match *cell {
                "0" => 0,
                "1" => 1,
                other => {
                    return Err(Error::parse(*lineno, format!("expected 0 or 1, got '{other}'")))
                }
            };
        }
        if matrix[i][i] != 0 {
            return Err(Error::parse(*lineno, format!("nonzero diagonal for unit {i}")));
        }
    }
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if matrix[i][j] != matrix[j][i] {
                return Err(Error::parse(
                    rows[j].0,
                    format!("asymmetric entries at ({i},{j}) and ({j},{i})"),
                ));
            }
            if matrix[i][j] == 1 {
                pairs.push((i, j));
            }
        }
    }
    Graph::from_edges(n, pairs)
}
