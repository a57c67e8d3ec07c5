//! Replicate aggregation: bias, spread, RMSE, mean standard error, and
//! interval coverage per (estimand, estimator) pair.

use anyhow::{bail, Result};
use serde::Serialize;

/// One replicate's recorded estimate.
#[derive(Debug, Clone, Serialize)]
pub struct ReplicateOutcome {
    pub estimate: Option<f64>,
    pub variance: Option<f64>,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
}

/// Aggregated evaluation metrics for one estimator against one estimand.
#[derive(Debug, Clone, Serialize)]
pub struct MetricsRow {
    pub estimand: String,
    pub estimator: String,
    pub true_value: f64,
    pub mean_estimate: f64,
    pub bias: f64,
    /// Empirical (n-1) standard deviation of the replicate estimates.
    pub sd: f64,
    /// Root of the mean squared error against the true value.
    pub rmse: f64,
    /// Mean of the per-replicate standard error estimates.
    pub mean_se: Option<f64>,
    /// Share of intervals covering the true value, among replicates that
    /// produced one.
    pub coverage: Option<f64>,
    pub reps: usize,
    pub undefined: usize,
}

/// Aggregate replicate outcomes. Undefined replicates are excluded and
/// counted. RMSE comes from raw errors; the decomposition
/// `rmse² = bias² + (n-1)/n · sd²` is asserted as a self-check.
pub fn metrics(
    estimand: &str,
    estimator: &str,
    outcomes: &[ReplicateOutcome],
    true_value: f64,
) -> Result<MetricsRow> {
    let estimates: Vec<f64> = outcomes.iter().filter_map(|o| o.estimate).collect();
    let undefined = outcomes.len() - estimates.len();
    if estimates.len() < 2 {
        bail!(
            "estimand '{estimand}' / estimator '{estimator}': {} defined replicates (need >= 2)",
            estimates.len()
        );
    }
    let n = estimates.len() as f64;
    let mean = estimates.iter().sum::<f64>() / n;
    let bias = mean - true_value;
    let sd = (estimates.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / (n - 1.0)).sqrt();
    let rmse = (estimates
        .iter()
        .map(|e| (e - true_value) * (e - true_value))
        .sum::<f64>()
        / n)
        .sqrt();

    let decomposition = bias * bias + (n - 1.0) / n * sd * sd;
    let gap = (rmse * rmse - decomposition).abs();
    assert!(
        gap <= 1e-9 * (rmse * rmse).max(1.0),
        "rmse decomposition violated: {gap}"
    );

    let ses: Vec<f64> = outcomes
        .iter()
        .filter_map(|o| o.variance)
        .map(|v| v.max(0.0).sqrt())
        .collect();
    let mean_se = (!ses.is_empty()).then(|| ses.iter().sum::<f64>() / ses.len() as f64);

    let covered: Vec<bool> = outcomes
        .iter()
        .filter_map(|o| match (o.ci_low, o.ci_high) {
            (Some(lo), Some(hi)) => Some(lo <= true_value && true_value <= hi),
            _ => None,
        })
        .collect();
    let coverage = (!covered.is_empty())
        .then(|| covered.iter().filter(|&&c| c).count() as f64 / covered.len() as f64);

    Ok(MetricsRow {
        estimand: estimand.to_string(),
        estimator: estimator.to_string(),
        true_value,
        mean_estimate: mean,
        bias,
        sd,
        rmse,
        mean_se,
        coverage,
        reps: estimates.len(),
        undefined,
    })
}

/// Monte Carlo standard error of the bias estimate: sd / sqrt(reps).
pub fn mcse(row: &MetricsRow) -> f64 {
    row.sd / (row.reps as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn outcome(estimate: f64) -> ReplicateOutcome {
        ReplicateOutcome { estimate: Some(estimate), variance: None, ci_low: None, ci_high: None }
    }

    #[test]
    fn hand_computed_three_values() {
        let rows = vec![outcome(1.0), outcome(2.0), outcome(3.0)];
        let m = metrics("tau", "ht", &rows, 2.0).unwrap();
        assert!(m.bias.abs() < 1e-15);
        assert!((m.sd - 1.0).abs() < 1e-15);
        assert!((m.rmse - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!(m.mean_se.is_none());
        assert!(m.coverage.is_none());
    }

    #[test]
    fn constant_estimates() {
        let rows = vec![outcome(5.0), outcome(5.0), outcome(5.0)];
        let m = metrics("tau", "ht", &rows, 3.0).unwrap();
        assert_eq!(m.sd, 0.0);
        assert!((m.rmse - m.bias.abs()).abs() < 1e-15);
        assert_eq!(m.bias, 2.0);
    }

    #[test]
    fn exact_estimates_cover_always() {
        let rows: Vec<ReplicateOutcome> = (0..4)
            .map(|_| ReplicateOutcome {
                estimate: Some(2.0),
                variance: Some(1.0),
                ci_low: Some(1.0),
                ci_high: Some(3.0),
            })
            .collect();
        let m = metrics("tau", "ht", &rows, 2.0).unwrap();
        assert_eq!(m.bias, 0.0);
        assert_eq!(m.sd, 0.0);
        assert_eq!(m.rmse, 0.0);
        assert_eq!(m.coverage, Some(1.0));
        assert_eq!(m.mean_se, Some(1.0));
    }

    #[test]
    fn undefined_replicates_are_counted() {
        let mut rows = vec![outcome(1.0), outcome(3.0)];
        rows.push(ReplicateOutcome { estimate: None, variance: None, ci_low: None, ci_high: None });
        let m = metrics("tau", "ht", &rows, 2.0).unwrap();
        assert_eq!(m.reps, 2);
        assert_eq!(m.undefined, 1);
    }

    #[test]
    fn all_undefined_is_an_error() {
        let rows = vec![ReplicateOutcome {
            estimate: None,
            variance: None,
            ci_low: None,
            ci_high: None,
        }];
        assert!(metrics("tau", "ht", &rows, 0.0).is_err());
    }
}
