//! Simulation data-generating processes: degree-correlated baselines,
//! dilated (multiplicative) potential outcomes per exposure condition,
//! observed-outcome realization, and saturation-keyed outcomes for
//! hierarchical designs.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::exposure::{ExposureMappingSpec, ExposureMatrix, MappingKind};
use crate::netgraph::Graph;
use crate::stats::{mean, stream_rng};

/// Potential outcomes per (condition, unit): a K x n table.
#[derive(Debug, Clone)]
pub struct PotentialOutcomeTable {
    pub spec: ExposureMappingSpec,
    pub n: usize,
    values: Vec<f64>,
}

impl PotentialOutcomeTable {
    pub fn new(spec: ExposureMappingSpec, n: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != spec.condition_count() * n {
            return Err(Error::Parameter(format!(
                "table holds {} values, expected {} x {}",
                values.len(),
                spec.condition_count(),
                n
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Integrity("potential outcomes must be finite".into()));
        }
        Ok(PotentialOutcomeTable { spec, n, values })
    }

    pub fn value(&self, condition: usize, unit: usize) -> f64 {
        self.values[condition * self.n + unit]
    }

    pub fn column(&self, condition: usize) -> &[f64] {
        &self.values[condition * self.n..(condition + 1) * self.n]
    }

    pub fn condition_mean(&self, condition: usize) -> f64 {
        mean(self.column(condition))
    }
}

/// Direction of the built-in dilated-effects presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpilloverSign {
    Positive,
    Negative,
}

/// A dilated-effects specification: per-condition multipliers on the
/// all-zero baseline plus the degree coefficient of the baseline draw.
#[derive(Debug, Clone)]
pub struct DgpSpec {
    pub mapping: ExposureMappingSpec,
    pub multipliers: Vec<f64>,
    pub kappa: f64,
    pub seed: u64,
}

impl DgpSpec {
    pub fn new(
        mapping: ExposureMappingSpec,
        multipliers: Vec<f64>,
        kappa: f64,
        seed: u64,
    ) -> Result<Self> {
        if multipliers.len() != mapping.condition_count() {
            return Err(Error::Parameter(format!(
                "{} multipliers supplied for {} conditions",
                multipliers.len(),
                mapping.condition_count()
            )));
        }
        let baseline = multipliers[mapping.baseline_condition()];
        if (baseline - 1.0).abs() > 1e-12 {
            return Err(Error::Parameter(format!(
                "the all-zero condition's multiplier must be 1, got {baseline}"
            )));
        }
        Ok(DgpSpec { mapping, multipliers, kappa, seed })
    }

    /// Built-in multiplier schedules. Positive presets dilate outcomes
    /// upward with exposure; negative presets place the fully-exposed and
    /// indirect conditions below their unexposed counterparts.
    pub fn preset(mapping: ExposureMappingSpec, sign: SpilloverSign, kappa: f64, seed: u64) -> Self {
        let multipliers = match (mapping.kind, sign) {
            (MappingKind::NoInterference, SpilloverSign::Positive) => vec![2.0, 1.0],
            (MappingKind::NoInterference, SpilloverSign::Negative) => vec![1.25, 1.0],
            (MappingKind::Hop1, SpilloverSign::Positive) => vec![2.0, 1.5, 1.25, 1.0],
            (MappingKind::Hop1, SpilloverSign::Negative) => vec![1.25, 1.5, 0.75, 1.0],
            (MappingKind::Hop2, SpilloverSign::Positive) => {
                vec![2.25, 2.0, 1.75, 1.5, 1.5, 1.25, 1.125, 1.0]
            }
            (MappingKind::Hop2, SpilloverSign::Negative) => {
                vec![1.125, 1.25, 1.375, 1.5, 0.625, 0.75, 0.875, 1.0]
            }
            (MappingKind::FullNeighborhood, SpilloverSign::Positive) => vec![2.0, 1.5, 1.0],
            (MappingKind::FullNeighborhood, SpilloverSign::Negative) => vec![1.25, 1.5, 1.0],
        };
        DgpSpec { mapping, multipliers, kappa, seed }
    }
}

/// Baseline outcomes `|eps_i| + kappa * (deg1_i + deg2_i)`: strictly
/// nonnegative and, for kappa > 0, positively tied to first- plus
/// second-order degree.
pub fn dilated_baseline(g: &Graph, kappa: f64, seed: u64) -> Result<Vec<f64>> {
    if kappa < 0.0 {
        return Err(Error::Parameter(format!("kappa must be >= 0, got {kappa}")));
    }
    let mut rng = stream_rng(seed, 0xba5e);
    Ok((0..g.unit_count())
        .map(|unit| {
            let noise: f64 = rng.sample(StandardNormal);
            let reach = g.degree(unit) + g.second_degree_set(unit).len();
            noise.abs() + kappa * reach as f64
        })
        .collect())
}

/// Expand a baseline into the full dilated table: `y_i(d_k) = m_k * y_i(d0)`.
pub fn dilated_outcomes(baseline: &[f64], spec: &DgpSpec) -> Result<PotentialOutcomeTable> {
    let n = baseline.len();
    let mut values = Vec::with_capacity(spec.multipliers.len() * n);
    for &m in &spec.multipliers {
        values.extend(baseline.iter().map(|&b| m * b));
    }
    PotentialOutcomeTable::new(spec.mapping, n, values)
}

/// Observed outcomes: each unit reads its realized condition's column.
pub fn realize_observed(e: &ExposureMatrix, t: &PotentialOutcomeTable) -> Result<Vec<f64>> {
    if e.n() != t.n || e.spec.condition_count() != t.spec.condition_count() {
        return Err(Error::Parameter(format!(
            "exposure matrix is {} units x {} conditions, table is {} x {}",
            e.n(),
            e.spec.condition_count(),
            t.n,
            t.spec.condition_count()
        )));
    }
    Ok((0..e.n()).map(|u| t.value(e.condition(u), u)).collect())
}

/// Average causal contrast between two conditions of a fixed table.
pub fn true_contrast(t: &PotentialOutcomeTable, k: usize, l: usize) -> f64 {
    t.condition_mean(k) - t.condition_mean(l)
}

/// The everyone-treated versus no-one-treated contrast, resolved through
/// the table's own mapping (its top and all-zero conditions).
pub fn true_global_contrast(t: &PotentialOutcomeTable) -> f64 {
    true_contrast(t, t.spec.top_condition(), t.spec.baseline_condition())
}

/// Write the long-form table: one `unit,condition,value` row per cell.
pub fn save_table(t: &PotentialOutcomeTable, path: impl AsRef<std::path::Path>) -> Result<()> {
    use std::io::Write;
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "unit,condition,value")?;
    for cond in 0..t.spec.condition_count() {
        for unit in 0..t.n {
            writeln!(out, "{unit},{},{}", t.spec.label(cond), t.value(cond, unit))?;
        }
    }
    Ok(())
}

/// Load a long-form table; every (unit, condition) cell must appear once.
pub fn load_table(
    spec: ExposureMappingSpec,
    path: impl AsRef<std::path::Path>,
) -> Result<PotentialOutcomeTable> {
    use std::io::BufRead;
    let reader = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut cells: Vec<Option<f64>> = Vec::new();
    let mut n = 0usize;
    let mut rows = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let raw = line?;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') || trimmed == "unit,condition,value" {
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(Error::parse(lineno, "expected 'unit,condition,value'"));
        }
        let unit: usize = fields[0]
            .parse()
            .map_err(|_| Error::parse(lineno, format!("invalid unit id '{}'", fields[0])))?;
        let cond = spec.condition_of_label(fields[1]).ok_or_else(|| {
            Error::parse(lineno, format!("unknown condition label '{}'", fields[1]))
        })?;
        let value: f64 = fields[2]
            .parse()
            .map_err(|_| Error::parse(lineno, format!("invalid value '{}'", fields[2])))?;
        n = n.max(unit + 1);
        rows.push((lineno, unit, cond, value));
    }
    cells.resize(spec.condition_count() * n, None);
    for (lineno, unit, cond, value) in rows {
        let slot = &mut cells[cond * n + unit];
        if slot.is_some() {
            return Err(Error::parse(
                lineno,
                format!("duplicate cell for unit {unit}, condition '{}'", spec.label(cond)),
            ));
        }
        *slot = Some(value);
    }
    let values: Option<Vec<f64>> = cells.into_iter().collect();
    let values = values.ok_or_else(|| {
        Error::Integrity("table is missing at least one (unit, condition) cell".into())
    })?;
    PotentialOutcomeTable::new(spec, n, values)
}

/// Whether hierarchical potential outcomes key on the unit's own group
/// saturation or on the saturation of a coarser tract.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HierarchyLevel {
    Group,
    Tract,
}

/// Potential outcomes for two-stage designs under stratified interference:
/// a (own assignment, saturation level) x unit table.
#[derive(Debug, Clone)]
pub struct SaturationOutcomes {
    pub level: HierarchyLevel,
    /// Realized saturation per level, descending.
    pub saturations: Vec<f64>,
    /// Multiplier when the unit is treated, per saturation level.
    pub treated: Vec<f64>,
    /// Multiplier when the unit is untreated, per saturation level.
    pub control: Vec<f64>,
    pub baseline: Vec<f64>,
}

impl SaturationOutcomes {
    pub fn n(&self) -> usize {
        self.baseline.len()
    }

    pub fn value(&self, unit: usize, z: u8, level_index: usize) -> f64 {
        let m = if z == 1 {
            self.treated[level_index]
        } else {
            self.control[level_index]
        };
        m * self.baseline[unit]
    }

    pub fn level_index(&self, saturation: f64) -> Result<usize> {
        self.saturations
            .iter()
            .position(|&s| (s - saturation).abs() < 1e-9)
            .ok_or_else(|| {
                Error::Parameter(format!(
                    "saturation {saturation} is not one of {:?}",
                    self.saturations
                ))
            })
    }
}

/// Build saturation-keyed potential outcomes for a two-stage design.
///
/// `multipliers = (treated@psi, treated@phi, control@psi)` with the
/// control@phi cell fixed at 1. At the tract level the saturation grid
/// becomes (psi, (psi+phi)/2, phi): both groups high, mixed, both low,
/// with each multiplier interpolated linearly between its endpoints.
pub fn hierarchical_outcomes(
    n_units: usize,
    psi: f64,
    phi: f64,
    multipliers: (f64, f64, f64),
    level: HierarchyLevel,
    seed: u64,
) -> Result<SaturationOutcomes> {
    if psi < phi {
        return Err(Error::Parameter(format!(
            "expected psi >= phi, got psi={psi}, phi={phi}"
        )));
    }
    let (t_psi, t_phi, c_psi) = multipliers;
    let mut rng = stream_rng(seed, 0x41e2);
    let baseline: Vec<f64> = (0..n_units)
        .map(|_| {
            let noise: f64 = rng.sample(StandardNormal);
            noise.abs()
        })
        .collect();
    // Equal saturations collapse the index to a single level, leaving only
    // the direct treated/control contrast.
    let (saturations, treated, control) = if (psi - phi).abs() < 1e-12 {
        (vec![psi], vec![t_psi], vec![1.0])
    } else {
        match level {
            HierarchyLevel::Group => (vec![psi, phi], vec![t_psi, t_phi], vec![c_psi, 1.0]),
            HierarchyLevel::Tract => (
                vec![psi, (psi + phi) / 2.0, phi],
                vec![t_psi, (t_psi + t_phi) / 2.0, t_phi],
                vec![c_psi, (c_psi + 1.0) / 2.0, 1.0],
            ),
        }
    };
    Ok(SaturationOutcomes { level, saturations, treated, control, baseline })
}
