//! Estimators for two-stage (partial-interference) designs: direct,
//! indirect, total, and overall marginal effects with between-group
//! variance estimates.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::stats::{mean, normal_quantile, sample_variance};

/// One unit's row of a two-stage experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HierarchicalRow {
    pub group: usize,
    /// 1 when the group sits in the high-saturation (psi) arm.
    pub group_tr: u8,
    pub indiv_tr: u8,
    pub obs_outcome: f64,
}

/// Post-treatment data for the hierarchical estimators.
#[derive(Debug, Clone, PartialEq)]
pub struct HierarchicalDataset {
    rows: Vec<HierarchicalRow>,
}

impl HierarchicalDataset {
    /// Validate arm consistency: every group's rows must share one arm.
    pub fn new(rows: Vec<HierarchicalRow>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Integrity("dataset has no rows".into()));
        }
        let mut arm_of: BTreeMap<usize, u8> = BTreeMap::new();
        for row in &rows {
            if row.group_tr > 1 || row.indiv_tr > 1 {
                return Err(Error::Integrity(format!(
                    "group {}: assignment flags must be 0 or 1",
                    row.group
                )));
            }
            match arm_of.insert(row.group, row.group_tr) {
                Some(prev) if prev != row.group_tr => {
                    return Err(Error::Integrity(format!(
                        "group {} mixes group_tr values {prev} and {}",
                        row.group, row.group_tr
                    )));
                }
                _ => {}
            }
        }
        Ok(HierarchicalDataset { rows })
    }

    pub fn rows(&self) -> &[HierarchicalRow] {
        &self.rows
    }

    pub fn groups(&self) -> Vec<usize> {
        let mut ids: Vec<usize> = self.rows.iter().map(|r| r.group).collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    fn group_rows(&self, group: usize) -> impl Iterator<Item = &HierarchicalRow> {
        self.rows.iter().filter(move |r| r.group == group)
    }

    fn group_arm(&self, group: usize) -> u8 {
        self.group_rows(group).next().map(|r| r.group_tr).unwrap_or(0)
    }
}

/// Mean observed outcome among units with assignment `z` in one group.
pub fn group_mean(d: &HierarchicalDataset, group: usize, z: u8) -> Result<f64> {
    let values: Vec<f64> = d
        .group_rows(group)
        .filter(|r| r.indiv_tr == z)
        .map(|r| r.obs_outcome)
        .collect();
    if values.is_empty() {
        return Err(Error::Integrity(format!(
            "group {group} has no unit with assignment {z}"
        )));
    }
    Ok(mean(&values))
}

/// Marginal-effect estimates for a two-stage design; field order mirrors
/// the five-effect output convention.
#[derive(Debug, Clone, Serialize)]
pub struct MarginalEffectsReport {
    pub direct_psi_hat: Option<f64>,
    pub direct_phi_hat: Option<f64>,
    pub indirect_hat: Option<f64>,
    pub total_hat: Option<f64>,
    pub overall_hat: Option<f64>,
    pub var_direct_psi_hat: Option<f64>,
    pub var_direct_phi_hat: Option<f64>,
    pub var_indirect_hat: Option<f64>,
    pub var_total_hat: Option<f64>,
    pub var_overall_hat: Option<f64>,
    pub psi_groups: usize,
    pub phi_groups: usize,
    pub alpha: f64,
}

impl MarginalEffectsReport {
    pub fn effects(&self) -> [(&'static str, Option<f64>, Option<f64>); 5] {
        [
            ("direct_psi_hat", self.direct_psi_hat, self.var_direct_psi_hat),
            ("direct_phi_hat", self.direct_phi_hat, self.var_direct_phi_hat),
            ("indirect_hat", self.indirect_hat, self.var_indirect_hat),
            ("total_hat", self.total_hat, self.var_total_hat),
            ("overall_hat", self.overall_hat, self.var_overall_hat),
        ]
    }

    /// Normal-approximation interval for one effect, when estimable.
    pub fn confidence_interval(&self, effect: &str) -> Option<(f64, f64)> {
        let (_, point, variance) = self
            .effects()
            .into_iter()
            .find(|(name, _, _)| *name == effect)?;
        let (point, variance) = (point?, variance?);
        let half = normal_quantile(1.0 - self.alpha / 2.0) * variance.max(0.0).sqrt();
        Some((point - half, point + half))
    }
}

/// Group-level summaries feeding the arm averages.
struct GroupSummary {
    treated_mean: Option<f64>,
    control_mean: Option<f64>,
    all_mean: f64,
}

/// Estimate the five marginal effects and their variances.
///
/// Arm-level means weight groups equally. Each variance is the
/// between-group sample variance of the group-level quantity divided by
/// the arm's group count; the within-arm direct effects treat the two
/// cell means as paired within group, and cross-arm contrasts add the
/// component variances.
pub fn marginal_effects(d: &HierarchicalDataset, alpha: f64) -> Result<MarginalEffectsReport> {
    let groups = d.groups();
    let mut summaries: BTreeMap<usize, GroupSummary> = BTreeMap::new();
    for &g in &groups {
        let treated: Vec<f64> = d
            .group_rows(g)
            .filter(|r| r.indiv_tr == 1)
            .map(|r| r.obs_outcome)
            .collect();
        let control: Vec<f64> = d
            .group_rows(g)
            .filter(|r| r.indiv_tr == 0)
            .map(|r| r.obs_outcome)
            .collect();
        let all: Vec<f64> = d.group_rows(g).map(|r| r.obs_outcome).collect();
        summaries.insert(
            g,
            GroupSummary {
                treated_mean: (!treated.is_empty()).then(|| mean(&treated)),
                control_mean: (!control.is_empty()).then(|| mean(&control)),
                all_mean: mean(&all),
            },
        );
    }

    let psi_groups: Vec<usize> = groups.iter().copied().filter(|&g| d.group_arm(g) == 1).collect();
    let phi_groups: Vec<usize> = groups.iter().copied().filter(|&g| d.group_arm(g) == 0).collect();
    if psi_groups.is_empty() || phi_groups.is_empty() {
        return Err(Error::Integrity("each arm needs at least one group".into()));
    }

    // Collect group-level series per arm; missing cells make the dependent
    // effects undefined without poisoning the others.
    let series = |ids: &[usize], f: &dyn Fn(&GroupSummary) -> Option<f64>| -> Option<Vec<f64>> {
        ids.iter().map(|g| f(&summaries[g])).collect()
    };
    let psi_treated = series(&psi_groups, &|s| s.treated_mean);
    let psi_control = series(&psi_groups, &|s| s.control_mean);
    let phi_treated = series(&phi_groups, &|s| s.treated_mean);
    let phi_control = series(&phi_groups, &|s| s.control_mean);
    let psi_all: Vec<f64> = psi_groups.iter().map(|g| summaries[g].all_mean).collect();
    let phi_all: Vec<f64> = phi_groups.iter().map(|g| summaries[g].all_mean).collect();

    let arm_mean = |v: &Option<Vec<f64>>| v.as_ref().map(|vals| mean(vals));
    let y1_psi = arm_mean(&psi_treated);
    let y0_psi = arm_mean(&psi_control);
    let y1_phi = arm_mean(&phi_treated);
    let y0_phi = arm_mean(&phi_control);

    // Variance of an arm-level mean: between-group sample variance over
    // the arm's group count. Single-group arms leave it undefined.
    let arm_var = |v: &Option<Vec<f64>>| -> Option<f64> {
        v.as_ref().and_then(|vals| {
            (vals.len() >= 2).then(|| sample_variance(vals) / vals.len() as f64)
        })
    };
    // Paired within-arm difference series for the direct effects.
    let paired_var = |t: &Option<Vec<f64>>, c: &Option<Vec<f64>>| -> Option<f64> {
        match (t, c) {
            (Some(t), Some(c)) if t.len() >= 2 => {
                let diffs: Vec<f64> = t.iter().zip(c).map(|(a, b)| a - b).collect();
                Some(sample_variance(&diffs) / diffs.len() as f64)
            }
            _ => None,
        }
    };

    let sub = |a: Option<f64>, b: Option<f64>| match (a, b) {
        (Some(a), Some(b)) => Some(a - b),
        _ => None,
    };
    let add = |a: Option<f64>, b: Option<f64>| match (a, b) {
        (Some(a), Some(b)) => Some(a + b),
        _ => None,
    };

    let overall_psi = mean(&psi_all);
    let overall_phi = mean(&phi_all);
    let var_overall = match (psi_all.len() >= 2, phi_all.len() >= 2) {
        (true, true) => Some(
            sample_variance(&psi_all) / psi_all.len() as f64
                + sample_variance(&phi_all) / phi_all.len() as f64,
        ),
        _ => None,
    };

    Ok(MarginalEffectsReport {
        direct_psi_hat: sub(y1_psi, y0_psi),
        direct_phi_hat: sub(y1_phi, y0_phi),
        indirect_hat: sub(y0_psi, y0_phi),
        total_hat: sub(y1_psi, y0_phi),
        overall_hat: Some(overall_psi - overall_phi),
        var_direct_psi_hat: paired_var(&psi_treated, &psi_control),
        var_direct_phi_hat: paired_var(&phi_treated, &phi_control),
        var_indirect_hat: add(arm_var(&psi_control), arm_var(&phi_control)),
        var_total_hat: add(arm_var(&psi_treated), arm_var(&phi_control)),
        var_overall_hat: var_overall,
        psi_groups: psi_groups.len(),
        phi_groups: phi_groups.len(),
        alpha,
    })
}

/// Load the four-column frame `group,group_tr,indiv_tr,obs_outcome`.
///
/// Accepts comma- or whitespace-separated rows, with or without a leading
/// row-index column, so printed data frames paste in unchanged.
pub fn load_hierarchical(path: impl AsRef<Path>) -> Result<HierarchicalDataset> {
    let reader = BufReader::new(std::fs::File::open(path)?);
    let mut rows = Vec::new();
    let mut saw_header = false;
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let raw = line?;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = if trimmed.contains(',') {
            trimmed.split(',').map(str::trim).collect()
        } else {
            trimmed.split_whitespace().collect()
        };
        if !saw_header {
            if fields.contains(&"group") && fields.contains(&"obs_outcome") {
                saw_header = true;
                continue;
            }
            return Err(Error::parse(
                lineno,
                "expected header with columns group,group_tr,indiv_tr,obs_outcome",
            ));
        }
        // A printed frame carries a row-index column; drop it.
        let fields: &[&str] = match fields.len() {
            4 => &fields,
            5 => &fields[1..],
            other => {
                return Err(Error::parse(
                    lineno,
                    format!("expected 4 data columns, got {other}"),
                ))
            }
        };
        let parse_flag = |s: &str, name: &str| -> Result<u8> {
            match s {
                "0" => Ok(0),
                "1" => Ok(1),
                other => Err(Error::parse(lineno, format!("{name} must be 0 or 1, got '{other}'"))),
            }
        };
        rows.push(HierarchicalRow {
            group: fields[0]
                .parse()
                .map_err(|_| Error::parse(lineno, format!("invalid group id '{}'", fields[0])))?,
            group_tr: parse_flag(fields[1], "group_tr")?,
            indiv_tr: parse_flag(fields[2], "indiv_tr")?,
            obs_outcome: fields[3]
                .parse()
                .map_err(|_| Error::parse(lineno, format!("invalid outcome '{}'", fields[3])))?,
        });
    }
    if !saw_header {
        return Err(Error::parse(1, "file is empty"));
    }
    HierarchicalDataset::new(rows)
}

/// Write the canonical comma-separated form.
pub fn save_hierarchical(d: &HierarchicalDataset, path: impl AsRef<Path>) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "group,group_tr,indiv_tr,obs_outcome")?;
    for row in d.rows() {
        writeln!(
            out,
            "{},{},{},{}",
            row.group, row.group_tr, row.indiv_tr, row.obs_outcome
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(group: usize, group_tr: u8, indiv_tr: u8, y: f64) -> HierarchicalRow {
        HierarchicalRow { group, group_tr, indiv_tr, obs_outcome: y }
    }

    /// Two psi-arm groups (treated means 3 and 5, control means 1 and 3)
    /// and two phi-arm groups.
    fn hand_dataset() -> HierarchicalDataset {
        HierarchicalDataset::new(vec![
            row(0, 1, 1, 3.0),
            row(0, 1, 0, 1.0),
            row(1, 1, 1, 5.0),
            row(1, 1, 0, 3.0),
            row(2, 0, 1, 2.0),
            row(2, 0, 0, 1.0),
            row(3, 0, 1, 4.0),
            row(3, 0, 0, 2.0),
        ])
        .unwrap()
    }

    #[test]
    fn group_mean_cases() {
        let d = HierarchicalDataset::new(vec![
            row(0, 1, 1, 3.0),
            row(0, 1, 0, 1.0),
            row(0, 1, 0, 3.0),
            row(1, 0, 1, 9.0),
        ])
        .unwrap();
        assert_eq!(group_mean(&d, 0, 1).unwrap(), 3.0);
        assert_eq!(group_mean(&d, 0, 0).unwrap(), 2.0);
        assert!(matches!(group_mean(&d, 1, 0), Err(Error::Integrity(_))));
    }

    #[test]
    fn marginal_effects_hand_arithmetic() {
        let report = marginal_effects(&hand_dataset(), 0.05).unwrap();
        // y(1;psi) = (3+5)/2 = 4, y(0;psi) = (1+3)/2 = 2 -> direct_psi = 2.
        assert!((report.direct_psi_hat.unwrap() - 2.0).abs() < 1e-12);
        // y(1;phi) = 3, y(0;phi) = 1.5 -> direct_phi = 1.5.
        assert!((report.direct_phi_hat.unwrap() - 1.5).abs() < 1e-12);
        assert!((report.indirect_hat.unwrap() - 0.5).abs() < 1e-12);
        assert!((report.total_hat.unwrap() - 2.5).abs() < 1e-12);
        // Group all-unit means: psi (2, 4), phi (1.5, 3) -> overall = 0.75.
        assert!((report.overall_hat.unwrap() - 0.75).abs() < 1e-12);
        assert_eq!(report.psi_groups, 2);
        assert_eq!(report.phi_groups, 2);
    }

    #[test]
    fn estimator_identity_total_equals_direct_plus_indirect() {
        let report = marginal_effects(&hand_dataset(), 0.05).unwrap();
        let lhs = report.total_hat.unwrap();
        let rhs = report.direct_psi_hat.unwrap() + report.indirect_hat.unwrap();
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn constant_outcomes_zero_effects_and_variances() {
        let rows = (0..4)
            .flat_map(|g| {
                let arm = u8::from(g < 2);
                [row(g, arm, 1, 2.5), row(g, arm, 0, 2.5)]
            })
            .collect();
        let report = marginal_effects(&HierarchicalDataset::new(rows).unwrap(), 0.05).unwrap();
        for (_, point, variance) in report.effects() {
            assert_eq!(point.unwrap(), 0.0);
            assert_eq!(variance.unwrap(), 0.0);
        }
    }

    #[test]
    fn report_serializes_in_output_order() {
        let report = marginal_effects(&hand_dataset(), 0.05).unwrap();
        let json = serde_json::to_string(&report).unwrap();
        let d = json.find("direct_psi_hat").unwrap();
        let dphi = json.find("direct_phi_hat").unwrap();
        let i = json.find("indirect_hat").unwrap();
        let t = json.find("total_hat").unwrap();
        let o = json.find("overall_hat").unwrap();
        assert!(d < dphi && dphi < i && i < t && t < o);
    }

    #[test]
    fn permuting_rows_within_group_is_invariant() {
        let mut rows = vec![
            row(0, 1, 1, 3.0),
            row(0, 1, 1, 7.0),
            row(0, 1, 0, 1.0),
            row(1, 0, 1, 2.0),
            row(1, 0, 0, 4.0),
            row(1, 0, 0, 6.0),
        ];
        let before =
            marginal_effects(&HierarchicalDataset::new(rows.clone()).unwrap(), 0.05).unwrap();
        rows.swap(0, 1);
        rows.swap(3, 5);
        let after =
            marginal_effects(&HierarchicalDataset::new(rows).unwrap(), 0.05).unwrap();
        for ((_, a, va), (_, b, vb)) in before.effects().into_iter().zip(after.effects()) {
            assert_eq!(a, b);
            assert_eq!(va, vb);
        }
    }

    #[test]
    fn global_constant_shift_leaves_contrasts_unchanged() {
        let base = hand_dataset();
        let shifted = HierarchicalDataset::new(
            base.rows()
                .iter()
                .map(|r| HierarchicalRow { obs_outcome: r.obs_outcome + 11.5, ..*r })
                .collect(),
        )
        .unwrap();
        let a = marginal_effects(&base, 0.05).unwrap();
        let b = marginal_effects(&shifted, 0.05).unwrap();
        for ((_, pa, _), (_, pb, _)) in a.effects().into_iter().zip(b.effects()) {
            assert!((pa.unwrap() - pb.unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn mixed_arm_group_rejected_by_name() {
        let err = HierarchicalDataset::new(vec![
            row(4, 1, 1, 1.0),
            row(4, 0, 0, 2.0),
        ])
        .unwrap_err();
        let message = err.to_string();
        assert!(message.contains("group 4"), "message: {message}");
    }

    #[test]
    fn missing_cell_leaves_other_effects_reported() {
        // The phi arm has no treated units: direct_phi and nothing else
        // becomes undefined.
        let d = HierarchicalDataset::new(vec![
            row(0, 1, 1, 3.0),
            row(0, 1, 0, 1.0),
            row(1, 1, 1, 5.0),
            row(1, 1, 0, 3.0),
            row(2, 0, 0, 1.0),
            row(3, 0, 0, 2.0),
        ])
        .unwrap();
        let report = marginal_effects(&d, 0.05).unwrap();
        assert!(report.direct_phi_hat.is_none());
        assert!(report.direct_psi_hat.is_some());
        assert!(report.indirect_hat.is_some());
        assert!(report.total_hat.is_some());
        assert!(report.overall_hat.is_some());
    }

    #[test]
    fn round_trip_and_printed_frame_fragment() {
        let dir = std::env::temp_dir().join(format!("spillover-hier-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("hier.csv");
        let d = hand_dataset();
        save_hierarchical(&d, &path).unwrap();
        assert_eq!(load_hierarchical(&path).unwrap(), d);

        // A printed frame excerpt: whitespace-separated with row indices.
        let printed = "\
   group group_tr indiv_tr obs_outcome
1      1        1        0   1.9269359
2      1        1        1   0.2788864
3      1        1        1   0.9606388
10     4        0        1   0.9062178
11     4        0        0   1.0599419
12     4        0        0   0.6051009
";
        let frag_path = dir.join("fragment.txt");
        std::fs::write(&frag_path, printed).unwrap();
        let frag = load_hierarchical(&frag_path).unwrap();
        assert_eq!(frag.rows().len(), 6);
        assert_eq!(frag.rows()[0].group, 1);
        assert_eq!(frag.rows()[0].indiv_tr, 0);
        assert!((frag.rows()[5].obs_outcome - 0.6051009).abs() < 1e-12);
        let report = marginal_effects(&frag, 0.05).unwrap();
        // One group per arm: points exist, between-group variances do not.
        assert!(report.direct_psi_hat.is_some());
        assert!(report.var_direct_psi_hat.is_none());
    }
}
