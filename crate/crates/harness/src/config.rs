//! Flat key-value scenario configuration: one `key = value` per line,
//! `#` comments, comma-separated lists for grid axes, and `a/b` fractions.

use std::collections::BTreeMap;

use anyhow::{anyhow, bail, Context, Result};
use spillover::exposure::ExposureMappingSpec;
use spillover::outcomes::{HierarchyLevel, SpilloverSign};

/// Which engine a config drives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioKind {
    Network,
    MissingTies,
    Hierarchical,
}

/// Unit-level randomization designs the harness can simulate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DesignChoice {
    Complete,
    Bernoulli,
    ClusterBernoulli,
    ClusterComplete,
}

impl DesignChoice {
    pub fn label(&self) -> &'static str {
        match self {
            DesignChoice::Complete => "complete",
            DesignChoice::Bernoulli => "bernoulli",
            DesignChoice::ClusterBernoulli => "cluster-bernoulli",
            DesignChoice::ClusterComplete => "cluster-complete",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContrastRule {
    EachVsBaseline,
    TopVsBaseline,
}

/// A parsed scenario grid.
#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub kind: ScenarioKind,
    pub name: String,
    // Network.
    pub n: usize,
    pub mean_degree: usize,
    pub rewire_prob: f64,
    pub graph_file: Option<String>,
    // Design axes.
    pub designs: Vec<DesignChoice>,
    pub p: f64,
    pub epsilon: usize,
    // DGP and analysis axes.
    pub truths: Vec<ExposureMappingSpec>,
    pub spillovers: Vec<SpilloverSign>,
    pub analyses: Vec<ExposureMappingSpec>,
    pub contrasts: ContrastRule,
    pub kappa: f64,
    // Replication.
    pub prob_reps: usize,
    pub reps: usize,
    pub ce_reps: usize,
    pub alpha: f64,
    pub seed: u64,
    pub restrict: bool,
    pub redraw_dgp: bool,
    // Missing ties.
    pub proportions: Vec<f64>,
    // Hierarchical.
    pub groups: usize,
    pub group_size: usize,
    pub psi: f64,
    pub phi: f64,
    pub share_psi: f64,
    pub level: HierarchyLevel,
    pub hier_multipliers: (f64, f64, f64),
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            kind: ScenarioKind::Network,
            name: "scenario".into(),
            n: 400,
            mean_degree: 4,
            rewire_prob: 0.1,
            graph_file: None,
            designs: vec![DesignChoice::Complete],
            p: 0.1,
            epsilon: 3,
            truths: vec![ExposureMappingSpec::hop1()],
            spillovers: vec![SpilloverSign::Positive],
            analyses: vec![ExposureMappingSpec::hop1()],
            contrasts: ContrastRule::EachVsBaseline,
            kappa: 0.1,
            prob_reps: 10_000,
            reps: 3000,
            ce_reps: 100,
            alpha: 0.05,
            seed: 1,
            restrict: false,
            redraw_dgp: false,
            proportions: vec![0.0, 0.25, 0.5],
            groups: 6,
            group_size: 75,
            psi: 2.0 / 3.0,
            phi: 1.0 / 3.0,
            share_psi: 0.5,
            level: HierarchyLevel::Group,
            hier_multipliers: (2.0, 1.5, 1.25),
        }
    }
}

/// Parse `key = value` lines into a map; later keys override earlier ones.
pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("line {}: expected 'key = value', got '{raw}'", idx + 1))?;
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

/// Numbers may be plain or a fraction like `2/3`.
pub fn parse_fraction(text: &str) -> Result<f64> {
    if let Some((num, den)) = text.split_once('/') {
        let num: f64 = num.trim().parse().with_context(|| format!("bad number '{num}'"))?;
        let den: f64 = den.trim().parse().with_context(|| format!("bad number '{den}'"))?;
        if den == 0.0 {
            bail!("division by zero in '{text}'");
        }
        return Ok(num / den);
    }
    text.parse::<f64>().with_context(|| format!("bad number '{text}'"))
}

fn parse_mapping(text: &str) -> Result<ExposureMappingSpec> {
    Ok(match text {
        "none" => ExposureMappingSpec::no_interference(),
        "hop1" | "1" => ExposureMappingSpec::hop1(),
        "hop2" | "2" => ExposureMappingSpec::hop2(),
        "full" => ExposureMappingSpec::full_neighborhood(),
        other => bail!("unknown exposure mapping '{other}' (none|hop1|hop2|full)"),
    })
}

fn parse_list<T>(text: &str, parse: impl Fn(&str) -> Result<T>) -> Result<Vec<T>> {
    text.split(',').map(|item| parse(item.trim())).collect()
}

impl ScenarioConfig {
    pub fn from_text(name: &str, text: &str) -> Result<Self> {
        let map = parse_key_values(text)?;
        let mut cfg = ScenarioConfig { name: name.to_string(), ..Default::default() };
        for (key, value) in &map {
            cfg.apply(key, value).with_context(|| format!("config key '{key}'"))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "scenario" => {
                self.kind = match value {
                    "network" => ScenarioKind::Network,
                    "missing-ties" => ScenarioKind::MissingTies,
                    "hierarchical" => ScenarioKind::Hierarchical,
                    other => bail!("unknown scenario kind '{other}'"),
                }
            }
            "n" => self.n = value.parse()?,
            "mean_degree" => self.mean_degree = value.parse()?,
            "rewire_prob" => self.rewire_prob = parse_fraction(value)?,
            "graph_file" => self.graph_file = Some(value.to_string()),
            "design" => {
                self.designs = parse_list(value, |item| {
                    Ok(match item {
                        "complete" => DesignChoice::Complete,
                        "bernoulli" => DesignChoice::Bernoulli,
                        "cluster-bernoulli" => DesignChoice::ClusterBernoulli,
                        "cluster-complete" => DesignChoice::ClusterComplete,
                        other => bail!("unknown design '{other}'"),
                    })
                })?
            }
            "p" => self.p = parse_fraction(value)?,
            "epsilon" => self.epsilon = value.parse()?,
            "truth" => self.truths = parse_list(value, parse_mapping)?,
            "spillover" => {
                self.spillovers = parse_list(value, |item| {
                    Ok(match item {
                        "positive" => SpilloverSign::Positive,
                        "negative" => SpilloverSign::Negative,
                        other => bail!("unknown spillover sign '{other}'"),
                    })
                })?
            }
            "analysis" => self.analyses = parse_list(value, parse_mapping)?,
            "contrasts" => {
                self.contrasts = match value {
                    "each-vs-baseline" => ContrastRule::EachVsBaseline,
                    "top-vs-baseline" => ContrastRule::TopVsBaseline,
                    other => bail!("unknown contrast rule '{other}'"),
                }
            }
            "kappa" => self.kappa = parse_fraction(value)?,
            "prob_reps" => self.prob_reps = value.parse()?,
            "reps" => self.reps = value.parse()?,
            "ce_reps" => self.ce_reps = value.parse()?,
            "alpha" => self.alpha = parse_fraction(value)?,
            "seed" => self.seed = value.parse()?,
            "restrict" => self.restrict = value.parse()?,
            "redraw_dgp" => self.redraw_dgp = value.parse()?,
            "proportions" => self.proportions = parse_list(value, parse_fraction)?,
            "groups" => self.groups = value.parse()?,
            "group_size" => self.group_size = value.parse()?,
            "psi" => self.psi = parse_fraction(value)?,
            "phi" => self.phi = parse_fraction(value)?,
            "share_psi" => self.share_psi = parse_fraction(value)?,
            "level" => {
                self.level = match value {
                    "group" => HierarchyLevel::Group,
                    "tract" => HierarchyLevel::Tract,
                    other => bail!("unknown hierarchy level '{other}'"),
                }
            }
            "hier_multipliers" => {
                let values = parse_list(value, parse_fraction)?;
                if values.len() != 3 {
                    bail!("hier_multipliers needs 3 values (treated@psi, treated@phi, control@psi)");
                }
                self.hier_multipliers = (values[0], values[1], values[2]);
            }
            other => bail!("unknown config key '{other}'"),
        }
        Ok(())
    }

    fn validate(&self) -> Result<()> {
        if self.reps == 0 || self.prob_reps == 0 {
            bail!("reps and prob_reps must be positive");
        }
        if !(0.0..1.0).contains(&self.alpha) || self.alpha == 0.0 {
            bail!("alpha must be in (0,1)");
        }
        for m in self.truths.iter().chain(&self.analyses) {
            if m.hop_level().is_none() && self.truths.contains(m) {
                bail!("the full-neighborhood mapping is analysis-only");
            }
        }
        // Cross-mapping analysis pools multiple true conditions; only the
        // everyone-vs-no-one contrast has a well-defined target there.
        let mismatched = self
            .truths
            .iter()
            .any(|t| self.analyses.iter().any(|a| a != t));
        if mismatched && self.contrasts != ContrastRule::TopVsBaseline {
            bail!(
                "a truth/analysis mismatch requires 'contrasts = top-vs-baseline' \
                 (the everyone-treated vs no-one-treated target)"
            );
        }
        if self.kind == ScenarioKind::MissingTies
            && self.proportions.iter().any(|p| !(0.0..=1.0).contains(p))
        {
            bail!("tie proportions must lie in [0,1]");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_lists_fractions_and_comments() {
        let text = "\
# grid
scenario = network
truth = hop1,hop2
spillover = positive,negative
analysis = none,hop1,hop2
contrasts = top-vs-baseline
psi = 2/3
p = 0.1
seed = 42
";
        let cfg = ScenarioConfig::from_text("t", text).unwrap();
        assert_eq!(cfg.truths.len(), 2);
        assert_eq!(cfg.spillovers.len(), 2);
        assert_eq!(cfg.analyses.len(), 3);
        assert!((cfg.psi - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(cfg.seed, 42);
    }

    #[test]
    fn rejects_unknown_keys_and_mismatched_contrasts() {
        assert!(ScenarioConfig::from_text("t", "bogus = 1").is_err());
        let text = "truth = hop1\nanalysis = none\ncontrasts = each-vs-baseline";
        assert!(ScenarioConfig::from_text("t", text).is_err());
        let ok = "truth = hop1\nanalysis = none\ncontrasts = top-vs-baseline";
        assert!(ScenarioConfig::from_text("t", ok).is_ok());
    }

    #[test]
    fn full_neighborhood_is_analysis_only() {
        let bad = "truth = full\nanalysis = full\ncontrasts = top-vs-baseline";
        assert!(ScenarioConfig::from_text("t", bad).is_err());
        let ok = "truth = hop1\nanalysis = full\ncontrasts = top-vs-baseline";
        assert!(ScenarioConfig::from_text("t", ok).is_ok());
    }
}
