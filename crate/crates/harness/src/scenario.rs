//! Scenario engine: expands a configured grid of (design, truth DGP,
//! assumed analysis mapping) cells, runs the replication loop for each,
//! and aggregates evaluation metrics.
//!
//! One graph and one potential-outcome schedule are fixed per scenario;
//! replicates vary only the randomization (plus the outcome draw when
//! `redraw_dgp` is set). Replicate seeds derive from the master seed by a
//! counter split, so results are identical for any worker count.

use std::collections::HashMap;
use std::path::Path;

use anyhow::{bail, Context, Result};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use spillover::design::{
    bernoulli_assignment, cluster_randomization, complete_randomization, epsilon_net_clustering,
    AssignmentSet, ClusterDesign, Clustering, DesignKind,
};
use spillover::estimators::{estimate_hajek, estimate_ht, EstimateOptions, EstimateReport};
use spillover::exposure::{
    exposure_probabilities, ExposureMapper, ExposureMappingSpec, ExposureProbabilities,
    MappingKind,
};
use spillover::hierarchical::{marginal_effects, HierarchicalDataset, HierarchicalRow};
use spillover::netgraph::{generate_small_world, load_graph, Graph};
use spillover::outcomes::{
    dilated_baseline, dilated_outcomes, hierarchical_outcomes, realize_observed, true_contrast,
    true_global_contrast, DgpSpec, HierarchyLevel, PotentialOutcomeTable,
};
use spillover::stats::{mean, round_half_even, stream_rng};

use crate::config::{ContrastRule, DesignChoice, ScenarioConfig, ScenarioKind};
use crate::metrics::{metrics, MetricsRow, ReplicateOutcome};

pub fn mapping_label(spec: ExposureMappingSpec) -> &'static str {
    match spec.kind {
        MappingKind::NoInterference => "none",
        MappingKind::Hop1 => "hop1",
        MappingKind::Hop2 => "hop2",
        MappingKind::FullNeighborhood => "full",
    }
}

/// Identifies one grid cell in the output tables.
#[derive(Debug, Clone, Default, Serialize)]
pub struct CellId {
    pub design: String,
    pub truth: String,
    pub spillover: String,
    pub analysis: String,
    pub proportion: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SummaryRow {
    #[serde(flatten)]
    pub cell: CellId,
    #[serde(flatten)]
    pub metrics: MetricsRow,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReplicateRow {
    pub rep: usize,
    #[serde(flatten)]
    pub cell: CellId,
    pub estimand: String,
    pub estimator: String,
    pub estimate: Option<f64>,
    pub variance: Option<f64>,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub defined: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunOutput {
    pub name: String,
    pub summary: Vec<SummaryRow>,
    pub replicates: Vec<ReplicateRow>,
    pub meta: serde_json::Value,
}

/// How the harness draws assignments for one design cell.
enum DesignContext {
    Complete { n: usize, treated: usize },
    Bernoulli { n: usize, p: f64 },
    Cluster { clustering: Clustering, p: f64, mode: ClusterDesign },
}

impl DesignContext {
    fn build(choice: DesignChoice, graph: &Graph, cfg: &ScenarioConfig, seed: u64) -> Result<Self> {
        let n = graph.unit_count();
        Ok(match choice {
            DesignChoice::Complete => {
                let treated = round_half_even(cfg.p * n as f64);
                if treated == 0 || treated >= n {
                    bail!("treated share {} is degenerate for n = {n}", cfg.p);
                }
                DesignContext::Complete { n, treated }
            }
            DesignChoice::Bernoulli => DesignContext::Bernoulli { n, p: cfg.p },
            DesignChoice::ClusterBernoulli | DesignChoice::ClusterComplete => {
                let clustering = epsilon_net_clustering(graph, cfg.epsilon, seed)?;
                let mode = if choice == DesignChoice::ClusterBernoulli {
                    ClusterDesign::Bernoulli
                } else {
                    ClusterDesign::Complete
                };
                DesignContext::Cluster { clustering, p: cfg.p, mode }
            }
        })
    }

    fn draw_one(&self, rng: &mut impl Rng) -> Vec<u8> {
        match self {
            DesignContext::Complete { n, treated } => {
                let mut z = vec![0u8; *n];
                for unit in rand::seq::index::sample(rng, *n, *treated) {
                    z[unit] = 1;
                }
                z
            }
            DesignContext::Bernoulli { n, p } => {
                (0..*n).map(|_| u8::from(rng.gen_bool(*p))).collect()
            }
            DesignContext::Cluster { clustering, p, mode } => {
                let c = clustering.cluster_count();
                let bits: Vec<u8> = match mode {
                    ClusterDesign::Bernoulli => {
                        (0..c).map(|_| u8::from(rng.gen_bool(*p))).collect()
                    }
                    ClusterDesign::Complete => {
                        let treated = round_half_even(p * c as f64);
                        let mut bits = vec![0u8; c];
                        for cl in rand::seq::index::sample(rng, c, treated) {
                            bits[cl] = 1;
                        }
                        bits
                    }
                };
                clustering.labels.iter().map(|&cl| bits[cl]).collect()
            }
        }
    }

    /// A batch draw for probability tallies or constant-effects redraws.
    fn draw_set(&self, r: usize, seed: u64, distinct: bool) -> Result<AssignmentSet> {
        Ok(match self {
            DesignContext::Complete { n, treated } => complete_randomization(
                *n,
                *treated as f64 / *n as f64,
                r,
                seed,
                !distinct,
            )
            .map_err(anyhow::Error::from)?,
            DesignContext::Bernoulli { n, p } => {
                bernoulli_assignment(*n, *p, r, seed).map_err(anyhow::Error::from)?
            }
            DesignContext::Cluster { clustering, p, mode } => {
                cluster_randomization(clustering, *p, r, seed, *mode)
                    .map_err(anyhow::Error::from)?
            }
        })
    }

    /// A set holding `r` draws made with a caller-provided RNG, for
    /// per-replicate redraw pools.
    fn draw_pool(&self, r: usize, rng: &mut impl Rng) -> AssignmentSet {
        let n = match self {
            DesignContext::Complete { n, .. } | DesignContext::Bernoulli { n, .. } => *n,
            DesignContext::Cluster { clustering, .. } => clustering.labels.len(),
        };
        AssignmentSet {
            n,
            vectors: (0..r).map(|_| self.draw_one(rng)).collect(),
            design_kind: DesignKind::Complete,
            p: 0.0,
            distinct: false,
        }
    }
}

// Fixed salts for the independent random streams of one scenario.
const SALT_GRAPH: u64 = 1;
const SALT_BASELINE: u64 = 2;
const SALT_PROBS: u64 = 3;
const SALT_CLUSTER: u64 = 4;
const SALT_REPLICATE: u64 = 5;

fn stream_seed(master: u64, salt: u64) -> u64 {
    master.wrapping_mul(0x0100_0000_01b3).wrapping_add(salt)
}

fn build_graph(cfg: &ScenarioConfig) -> Result<Graph> {
    match &cfg.graph_file {
        Some(path) => load_graph(path).with_context(|| format!("loading graph '{path}'")),
        None => Ok(generate_small_world(
            cfg.n,
            cfg.mean_degree,
            cfg.rewire_prob,
            stream_seed(cfg.seed, SALT_GRAPH),
        )?),
    }
}

struct ContrastSpec {
    k: usize,
    l: usize,
    estimand: String,
    true_value: f64,
}

/// Contrasts for one (truth table, analysis mapping) pairing, each carrying
/// its target value.
fn contrast_specs(
    rule: ContrastRule,
    analysis: ExposureMappingSpec,
    truth: ExposureMappingSpec,
    table: &PotentialOutcomeTable,
) -> Vec<ContrastSpec> {
    let matched = analysis == truth;
    let baseline = analysis.baseline_condition();
    let conditions: Vec<usize> = match rule {
        ContrastRule::EachVsBaseline => (0..baseline).collect(),
        ContrastRule::TopVsBaseline => vec![analysis.top_condition()],
    };
    conditions
        .into_iter()
        .map(|k| {
            let (estimand, true_value) = if matched {
                (
                    format!("tau({}:{})", analysis.label(k), analysis.label(baseline)),
                    true_contrast(table, k, baseline),
                )
            } else {
                ("tau(1:0)".to_string(), true_global_contrast(table))
            };
            ContrastSpec { k, l: baseline, estimand, true_value }
        })
        .collect()
}

struct CellInputs<'a> {
    cell: CellId,
    cell_index: u64,
    truth_graph: &'a Graph,
    truth: ExposureMappingSpec,
    analysis_graph: &'a Graph,
    analysis: ExposureMappingSpec,
    dgp: &'a DgpSpec,
    table: &'a PotentialOutcomeTable,
    probs: &'a ExposureProbabilities,
    design: &'a DesignContext,
    contrasts: Vec<ContrastSpec>,
}

fn estimator_label(kind: &str, analysis: ExposureMappingSpec, k: usize, l: usize) -> String {
    format!("{kind}({}:{})", analysis.label(k), analysis.label(l))
}

/// The replication loop for one cell: per replicate, draw an assignment,
/// realize outcomes under the true mapping, analyze under the assumed one.
fn run_cell(cfg: &ScenarioConfig, inputs: &CellInputs) -> Result<(Vec<SummaryRow>, Vec<ReplicateRow>)> {
    let truth_mapper = ExposureMapper::new(inputs.truth_graph, inputs.truth);
    let analysis_mapper = ExposureMapper::new(inputs.analysis_graph, inputs.analysis);
    let opts = EstimateOptions { alpha: cfg.alpha, restrict_to_positive: cfg.restrict };

    let per_rep: Vec<Result<Vec<(String, String, EstimateReport)>>> = (0..cfg.reps)
        .into_par_iter()
        .map(|rep| {
            let stream = inputs.cell_index << 40 | (SALT_REPLICATE << 32) | rep as u64;
            let mut rng = stream_rng(cfg.seed, stream);
            let z = inputs.design.draw_one(&mut rng);

            // Optionally re-draw the outcome schedule for robustness runs.
            let local_table;
            let table = if cfg.redraw_dgp {
                let baseline =
                    dilated_baseline(inputs.truth_graph, cfg.kappa, rng.gen::<u64>())?;
                local_table = dilated_outcomes(&baseline, inputs.dgp)?;
                &local_table
            } else {
                inputs.table
            };

            let e_true = truth_mapper.map(&z)?;
            let y = realize_observed(&e_true, table)?;
            let e_analysis = analysis_mapper.map(&z)?;

            let redraws = (cfg.ce_reps > 0).then(|| inputs.design.draw_pool(cfg.ce_reps, &mut rng));

            let mut records = Vec::with_capacity(inputs.contrasts.len() * 2);
            for c in &inputs.contrasts {
                let ht = estimate_ht(
                    &analysis_mapper,
                    &e_analysis,
                    &y,
                    inputs.probs,
                    c.k,
                    c.l,
                    redraws.as_ref(),
                    opts,
                )?;
                records.push((
                    c.estimand.clone(),
                    estimator_label("ht", inputs.analysis, c.k, c.l),
                    ht,
                ));
                let hj = estimate_hajek(&e_analysis, &y, inputs.probs, c.k, c.l, opts)?;
                records.push((
                    c.estimand.clone(),
                    estimator_label("hajek", inputs.analysis, c.k, c.l),
                    hj,
                ));
            }
            Ok(records)
        })
        .collect();

    let mut replicate_rows = Vec::with_capacity(cfg.reps * inputs.contrasts.len() * 2);
    let mut grouped: HashMap<(String, String), (f64, Vec<ReplicateOutcome>)> = HashMap::new();
    for (rep, outcome) in per_rep.into_iter().enumerate() {
        for (estimand, estimator, report) in outcome? {
            let spec = inputs
                .contrasts
                .iter()
                .find(|c| c.estimand == estimand)
                .expect("estimand from this cell");
            replicate_rows.push(ReplicateRow {
                rep,
                cell: inputs.cell.clone(),
                estimand: estimand.clone(),
                estimator: estimator.clone(),
                estimate: report.point,
                variance: report.variance,
                ci_low: report.ci_low,
                ci_high: report.ci_high,
                defined: report.defined,
            });
            grouped
                .entry((estimand, estimator))
                .or_insert_with(|| (spec.true_value, Vec::new()))
                .1
                .push(ReplicateOutcome {
                    estimate: report.point,
                    variance: report.variance,
                    ci_low: report.ci_low,
                    ci_high: report.ci_high,
                });
        }
    }

    let mut keys: Vec<(String, String)> = grouped.keys().cloned().collect();
    keys.sort();
    let mut summary = Vec::new();
    for key in keys {
        let (true_value, outcomes) = &grouped[&key];
        summary.push(SummaryRow {
            cell: inputs.cell.clone(),
            metrics: metrics(&key.0, &key.1, outcomes, *true_value)?,
        });
    }
    Ok((summary, replicate_rows))
}

/// Run a network or missing-ties scenario grid.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<RunOutput> {
    if cfg.kind == ScenarioKind::Hierarchical {
        return run_hierarchical_scenario(cfg);
    }
    let truth_graph = build_graph(cfg)?;
    let baseline = dilated_baseline(&truth_graph, cfg.kappa, stream_seed(cfg.seed, SALT_BASELINE))?;

    // One outcome schedule per (truth mapping, spillover sign).
    type TableEntry = (
        ExposureMappingSpec,
        spillover::outcomes::SpilloverSign,
        DgpSpec,
        PotentialOutcomeTable,
    );
    let mut tables: Vec<TableEntry> = Vec::new();
    for &truth in &cfg.truths {
        for &sign in &cfg.spillovers {
            let spec = DgpSpec::preset(truth, sign, cfg.kappa, cfg.seed);
            let table = dilated_outcomes(&baseline, &spec)?;
            tables.push((truth, sign, spec, table));
        }
    }

    let proportions: Vec<Option<f64>> = match cfg.kind {
        ScenarioKind::MissingTies => cfg.proportions.iter().copied().map(Some).collect(),
        _ => vec![None],
    };

    let mut summary = Vec::new();
    let mut replicates = Vec::new();
    let mut cell_index: u64 = 0;
    for proportion in &proportions {
        let analysis_graph = match proportion {
            Some(p) => truth_graph.remove_ties(*p, stream_seed(cfg.seed, 0x11e5))?,
            None => truth_graph.clone(),
        };
        for (design_idx, &design_choice) in cfg.designs.iter().enumerate() {
            let design = DesignContext::build(
                design_choice,
                &analysis_graph,
                cfg,
                stream_seed(cfg.seed, SALT_CLUSTER + design_idx as u64),
            )?;
            let prob_draws = design.draw_set(
                cfg.prob_reps,
                stream_seed(cfg.seed, SALT_PROBS + design_idx as u64),
                matches!(design_choice, DesignChoice::Complete),
            )?;
            for &analysis in &cfg.analyses {
                let probs =
                    exposure_probabilities(&analysis_graph, &prob_draws, analysis, true)?;
                for (truth, sign, dgp, table) in &tables {
                    let cell = CellId {
                        design: design_choice.label().to_string(),
                        truth: mapping_label(*truth).to_string(),
                        spillover: match sign {
                            spillover::outcomes::SpilloverSign::Positive => "positive".into(),
                            spillover::outcomes::SpilloverSign::Negative => "negative".into(),
                        },
                        analysis: mapping_label(analysis).to_string(),
                        proportion: proportion.map(|p| p.to_string()).unwrap_or_default(),
                    };
                    let inputs = CellInputs {
                        cell,
                        cell_index,
                        truth_graph: &truth_graph,
                        truth: *truth,
                        analysis_graph: &analysis_graph,
                        analysis,
                        dgp,
                        table,
                        probs: &probs,
                        design: &design,
                        contrasts: contrast_specs(cfg.contrasts, analysis, *truth, table),
                    };
                    let (mut cell_summary, mut cell_reps) = run_cell(cfg, &inputs)?;
                    summary.append(&mut cell_summary);
                    replicates.append(&mut cell_reps);
                    cell_index += 1;
                }
            }
        }
    }

    let meta = serde_json::json!({
        "name": cfg.name,
        "scenario": match cfg.kind {
            ScenarioKind::Network => "network",
            ScenarioKind::MissingTies => "missing-ties",
            ScenarioKind::Hierarchical => "hierarchical",
        },
        "version": env!("CARGO_PKG_VERSION"),
        "n": truth_graph.unit_count(),
        "edges": truth_graph.edge_count(),
        "seed": cfg.seed,
        "reps": cfg.reps,
        "prob_reps": cfg.prob_reps,
        "ce_reps": cfg.ce_reps,
        "alpha": cfg.alpha,
        "restrict": cfg.restrict,
        "baseline_mean": mean(&baseline),
    });
    Ok(RunOutput { name: cfg.name.clone(), summary, replicates, meta })
}

/// Saturation-level index of each group under an assignment, at the level
/// the outcome schedule keys on.
fn unit_levels(
    level: HierarchyLevel,
    group_in_psi: &[bool],
) -> Vec<usize> {
    match level {
        HierarchyLevel::Group => group_in_psi.iter().map(|&in_psi| usize::from(!in_psi)).collect(),
        HierarchyLevel::Tract => {
            // Tracts pair consecutive groups; the level is the number of
            // phi-arm groups in the tract (0 = both high ... 2 = both low).
            group_in_psi
                .iter()
                .enumerate()
                .map(|(gid, _)| {
                    let tract = gid / 2;
                    let a = group_in_psi[2 * tract];
                    let b = *group_in_psi.get(2 * tract + 1).unwrap_or(&a);
                    2 - (usize::from(a) + usize::from(b))
                })
                .collect()
        }
    }
}

/// Run a two-stage scenario: group-level analysis of data generated under
/// group- or tract-level stratified interference.
pub fn run_hierarchical_scenario(cfg: &ScenarioConfig) -> Result<RunOutput> {
    if cfg.kind != ScenarioKind::Hierarchical {
        bail!("config is not a hierarchical scenario");
    }
    if cfg.level == HierarchyLevel::Tract && !cfg.groups.is_multiple_of(2) {
        bail!("tract-level truth pairs groups; an even group count is required");
    }
    let n = cfg.groups * cfg.group_size;
    let group_of: Vec<usize> = (0..n).map(|u| u / cfg.group_size).collect();
    let outcomes = hierarchical_outcomes(
        n,
        cfg.psi,
        cfg.phi,
        cfg.hier_multipliers,
        cfg.level,
        stream_seed(cfg.seed, SALT_BASELINE),
    )?;
    let m_b = mean(&outcomes.baseline);

    // Targets evaluate the pure saturation patterns (all-high vs all-low).
    let hi = 0usize;
    let lo = outcomes.saturations.len() - 1;
    let s_psi = round_half_even(cfg.psi * cfg.group_size as f64) as f64 / cfg.group_size as f64;
    let s_phi = round_half_even(cfg.phi * cfg.group_size as f64) as f64 / cfg.group_size as f64;
    let t = &outcomes.treated;
    let c = &outcomes.control;
    let true_values: Vec<(&str, f64)> = vec![
        ("direct_psi_hat", (t[hi] - c[hi]) * m_b),
        ("direct_phi_hat", (t[lo] - c[lo]) * m_b),
        ("indirect_hat", (c[hi] - c[lo]) * m_b),
        ("total_hat", (t[hi] - c[lo]) * m_b),
        (
            "overall_hat",
            ((s_psi * t[hi] + (1.0 - s_psi) * c[hi]) - (s_phi * t[lo] + (1.0 - s_phi) * c[lo]))
                * m_b,
        ),
    ];

    let per_rep: Vec<Result<Vec<(String, ReplicateOutcome)>>> = (0..cfg.reps)
        .into_par_iter()
        .map(|rep| {
            let rep_seed = stream_seed(cfg.seed, (SALT_REPLICATE << 32) | rep as u64);
            let assignment = spillover::design::two_stage_assignment(
                &group_of,
                cfg.psi,
                cfg.phi,
                cfg.share_psi,
                rep_seed,
            )?;
            let levels = unit_levels(cfg.level, &assignment.group_in_psi_arm);
            let rows: Vec<HierarchicalRow> = (0..n)
                .map(|unit| {
                    let gid = group_of[unit];
                    HierarchicalRow {
                        group: gid,
                        group_tr: u8::from(assignment.group_in_psi_arm[gid]),
                        indiv_tr: assignment.z[unit],
                        obs_outcome: outcomes.value(unit, assignment.z[unit], levels[gid]),
                    }
                })
                .collect();
            let report = marginal_effects(&HierarchicalDataset::new(rows)?, cfg.alpha)?;
            Ok(report
                .effects()
                .into_iter()
                .map(|(name, point, variance)| {
                    let ci = report.confidence_interval(name);
                    (
                        name.to_string(),
                        ReplicateOutcome {
                            estimate: point,
                            variance,
                            ci_low: ci.map(|c| c.0),
                            ci_high: ci.map(|c| c.1),
                        },
                    )
                })
                .collect())
        })
        .collect();

    let cell = CellId {
        design: "two-stage".into(),
        truth: match cfg.level {
            HierarchyLevel::Group => "group".into(),
            HierarchyLevel::Tract => "tract".into(),
        },
        spillover: String::new(),
        analysis: "group".into(),
        proportion: String::new(),
    };
    let mut replicates = Vec::new();
    let mut grouped: HashMap<String, Vec<ReplicateOutcome>> = HashMap::new();
    for (rep, outcome) in per_rep.into_iter().enumerate() {
        for (effect, record) in outcome? {
            replicates.push(ReplicateRow {
                rep,
                cell: cell.clone(),
                estimand: effect.clone(),
                estimator: "two-stage".into(),
                estimate: record.estimate,
                variance: record.variance,
                ci_low: record.ci_low,
                ci_high: record.ci_high,
                defined: record.estimate.is_some(),
            });
            grouped.entry(effect).or_default().push(record);
        }
    }

    let mut summary = Vec::new();
    for (effect, true_value) in &true_values {
        let outcomes = grouped
            .remove(*effect)
            .ok_or_else(|| anyhow::anyhow!("missing effect {effect}"))?;
        summary.push(SummaryRow {
            cell: cell.clone(),
            metrics: metrics(effect, "two-stage", &outcomes, *true_value)?,
        });
    }

    let meta = serde_json::json!({
        "name": cfg.name,
        "scenario": "hierarchical",
        "version": env!("CARGO_PKG_VERSION"),
        "groups": cfg.groups,
        "group_size": cfg.group_size,
        "psi": cfg.psi,
        "phi": cfg.phi,
        "share_psi": cfg.share_psi,
        "level": cell.truth,
        "seed": cfg.seed,
        "reps": cfg.reps,
        "alpha": cfg.alpha,
        "baseline_mean": m_b,
    });
    Ok(RunOutput { name: cfg.name.clone(), summary, replicates, meta })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl RunOutput {
    pub fn summary_csv(&self) -> String {
        let mut out = String::from(
            "design,truth,spillover,analysis,proportion,estimand,estimator,true_value,\
             mean_estimate,bias,sd,rmse,mean_se,coverage,reps,undefined\n",
        );
        for row in &self.summary {
            let m = &row.metrics;
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                row.cell.design,
                row.cell.truth,
                row.cell.spillover,
                row.cell.analysis,
                row.cell.proportion,
                m.estimand,
                m.estimator,
                m.true_value,
                m.mean_estimate,
                m.bias,
                m.sd,
                m.rmse,
                fmt_opt(m.mean_se),
                fmt_opt(m.coverage),
                m.reps,
                m.undefined
            ));
        }
        out
    }

    pub fn replicates_csv(&self) -> String {
        let mut out = String::from(
            "rep,design,truth,spillover,analysis,proportion,estimand,estimator,estimate,\
             variance,ci_low,ci_high,defined\n",
        );
        for row in &self.replicates {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                row.rep,
                row.cell.design,
                row.cell.truth,
                row.cell.spillover,
                row.cell.analysis,
                row.cell.proportion,
                row.estimand,
                row.estimator,
                fmt_opt(row.estimate),
                fmt_opt(row.variance),
                fmt_opt(row.ci_low),
                fmt_opt(row.ci_high),
                row.defined
            ));
        }
        out
    }

    /// Write summary, per-replicate estimates, and a config echo.
    pub fn write(&self, dir: impl AsRef<Path>, format: &str) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        match format {
            "csv" => {
                std::fs::write(dir.join("summary.csv"), self.summary_csv())?;
                std::fs::write(dir.join("replicates.csv"), self.replicates_csv())?;
            }
            "json" => {
                std::fs::write(
                    dir.join("summary.json"),
                    serde_json::to_string_pretty(&self.summary)?,
                )?;
                std::fs::write(
                    dir.join("replicates.json"),
                    serde_json::to_string_pretty(&self.replicates)?,
                )?;
            }
            other => bail!("unknown output format '{other}' (csv|json)"),
        }
        std::fs::write(dir.join("meta.json"), serde_json::to_string_pretty(&self.meta)?)?;
        Ok(())
    }
}
