//! Horvitz-Thompson and Hajek estimation of exposure-condition means and
//! contrasts, with conservative, constant-effects, and linearized variance
//! estimators and normal-approximation confidence intervals.
//!
//! All operations are pure over immutable inputs. Variance estimators need
//! joint exposure probabilities; requesting one against a table built
//! without them is a [`Error::Probability`].

use serde::Serialize;

use crate::design::{AssignmentSet, DesignKind};
use crate::error::{Error, Result};
use crate::exposure::{ExposureMapper, ExposureMatrix, ExposureProbabilities};
use crate::stats::{normal_quantile, population_variance, sample_variance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    HorvitzThompson,
    Hajek,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VarianceKind {
    Conservative,
    ConstantEffects,
    Max,
    Linearized,
    Unavailable,
}

/// Point estimate, variance, and interval for one condition contrast.
#[derive(Debug, Clone, Serialize)]
pub struct EstimateReport {
    pub estimator: EstimatorKind,
    pub k: String,
    pub l: String,
    pub point: Option<f64>,
    pub variance: Option<f64>,
    pub variance_kind: VarianceKind,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub alpha: f64,
    pub defined: bool,
    /// Inverse-probability totals per condition.
    pub total_k: f64,
    pub total_l: f64,
    /// Condition means on the estimation basis.
    pub mean_k: Option<f64>,
    pub mean_l: Option<f64>,
    /// Realized unit counts per condition.
    pub count_k: usize,
    pub count_l: usize,
}

/// Knobs shared by the estimator entry points.
#[derive(Debug, Clone, Copy)]
pub struct EstimateOptions {
    pub alpha: f64,
    /// Restrict totals, means, and the averaging basis to units with
    /// positive estimated probability in every contrasted condition.
    pub restrict_to_positive: bool,
}

impl Default for EstimateOptions {
    fn default() -> Self {
        EstimateOptions { alpha: 0.05, restrict_to_positive: false }
    }
}

/// Eligibility mask over units for a set of contrasted conditions, plus the
/// averaging basis (the restricted unit count, or n when unrestricted).
fn eligibility(
    probs: &ExposureProbabilities,
    conditions: &[usize],
    restrict: bool,
) -> (Vec<bool>, usize) {
    let n = probs.n;
    if !restrict {
        return (vec![true; n], n);
    }
    let mask: Vec<bool> = (0..n)
        .map(|i| conditions.iter().all(|&c| probs.individual(c, i) > 0.0))
        .collect();
    let basis = mask.iter().filter(|&&m| m).count();
    (mask, basis)
}

/// Realized, eligible units of one condition with their weights `y/pi` and
/// probabilities; errors when a realized eligible unit has zero estimated
/// probability.
struct ConditionSlice {
    units: Vec<usize>,
    pi: Vec<f64>,
    weighted: Vec<f64>,
}

fn condition_slice(
    e: &ExposureMatrix,
    y: &[f64],
    probs: &ExposureProbabilities,
    condition: usize,
    mask: &[bool],
) -> Result<ConditionSlice> {
    let mut units = Vec::new();
    let mut pi = Vec::new();
    let mut weighted = Vec::new();
    for unit in 0..e.n() {
        if !mask[unit] || e.condition(unit) != condition {
            continue;
        }
        let p = probs.individual(condition, unit);
        if p <= 0.0 {
            return Err(Error::Probability(format!(
                "unit {unit} realized condition '{}' which has estimated probability 0",
                probs.spec.label(condition)
            )));
        }
        units.push(unit);
        pi.push(p);
        weighted.push(y[unit] / p);
    }
    Ok(ConditionSlice { units, pi, weighted })
}

/// Horvitz-Thompson total of a condition over all N units.
pub fn ht_total(
    e: &ExposureMatrix,
    y: &[f64],
    probs: &ExposureProbabilities,
    condition: usize,
) -> Result<f64> {
    let mask = vec![true; e.n()];
    let slice = condition_slice(e, y, probs, condition, &mask)?;
    Ok(slice.weighted.iter().sum())
}

/// Internals of a Horvitz-Thompson contrast.
#[derive(Debug, Clone)]
pub struct HtContrast {
    pub point: Option<f64>,
    pub total_k: f64,
    pub total_l: f64,
    pub count_k: usize,
    pub count_l: usize,
    /// Units averaged over: N, or the restricted count under the
    /// positive-probability restriction.
    pub basis: usize,
    pub defined: bool,
}

/// tau_HT(k, l) = (total_k - total_l) / basis. Undefined (point = None)
/// when either condition has no realized unit.
pub fn ht_contrast(
    e: &ExposureMatrix,
    y: &[f64],
    probs: &ExposureProbabilities,
    k: usize,
    l: usize,
    opts: EstimateOptions,
) -> Result<HtContrast> {
    let (mask, basis) = eligibility(probs, &[k, l], opts.restrict_to_positive);
    let sk = condition_slice(e, y, probs, k, &mask)?;
    let sl = condition_slice(e, y, probs, l, &mask)?;
    let total_k: f64 = sk.weighted.iter().sum();
    let total_l: f64 = sl.weighted.iter().sum();
    let defined = !sk.units.is_empty() && !sl.units.is_empty() && basis > 0;
    Ok(HtContrast {
        point: defined.then(|| (total_k - total_l) / basis as f64),
        total_k,
        total_l,
        count_k: sk.units.len(),
        count_l: sl.units.len(),
        basis,
        defined,
    })
}

/// Hajek (ratio) mean of a condition; None when no unit realized it.
pub fn hajek_mean(
    e: &ExposureMatrix,
    y: &[f64],
    probs: &ExposureProbabilities,
    condition: usize,
) -> Result<Option<f64>> {
    hajek_mean_masked(e, y, probs, condition, &vec![true; e.n()])
}

fn hajek_mean_masked(
    e: &ExposureMatrix,
    y: &[f64],
    probs: &ExposureProbabilities,
    condition: usize,
    mask: &[bool],
) -> Result<Option<f64>> {
    let slice = condition_slice(e, y, probs, condition, mask)?;
    if slice.units.is_empty() {
        return Ok(None);
    }
    let num: f64 = slice.weighted.iter().sum();
    let den: f64 = slice.pi.iter().map(|p| 1.0 / p).sum();
    Ok(Some(num / den))
}

/// Conservative variance of the Horvitz-Thompson total of one condition:
/// a realized-value plug-in of the design variance, plus a nonnegative
/// correction for unit pairs that can never share the condition.
pub fn conservative_variance(
    e: &ExposureMatrix,
    y: &[f64],
    probs: &ExposureProbabilities,
    condition: usize,
) -> Result<f64> {
    conservative_variance_masked(e, y, probs, condition, &vec![true; e.n()])
}

fn conservative_variance_masked(
    e: &ExposureMatrix,
    y: &[f64],
    probs: &ExposureProbabilities,
    condition: usize,
    mask: &[bool],
) -> Result<f64> {
    if !probs.has_joint() {
        return Err(Error::Probability(
            "variance estimation requires joint probabilities; tally them with want_joint".into(),
        ));
    }
    let slice = condition_slice(e, y, probs, condition, mask)?;
    let inv_r = probs.inv_r();

    // Own-unit term: (1 - pi) * (y / pi)^2 for realized units.
    let mut total = 0.0;
    for (idx, &unit) in slice.units.iter().enumerate() {
        let w = slice.weighted[idx];
        total += (1.0 - slice.pi[idx]) * w * w;
        // Correction over ordered pairs that never co-occur: each zero-joint
        // partner j contributes y_i^2 / (2 pi_i) twice across (i,j), (j,i).
        total += probs.zero_pair_count(condition, unit) as f64 * y[unit] * y[unit]
            / slice.pi[idx];
    }

    // Identified pair term over realized pairs with positive joint mass.
    for (a, &i) in slice.units.iter().enumerate() {
        let row = probs.joint_row(condition, condition, i);
        for (b, &j) in slice.units.iter().enumerate() {
            if i == j {
                continue;
            }
            let count = row[j];
            if count == 0 {
                continue;
            }
            let pij = count as f64 * inv_r;
            let pi_pj = slice.pi[a] * slice.pi[b];
            total += (pij - pi_pj) / pij * slice.weighted[a] * slice.weighted[b];
        }
    }
    Ok(total)
}

/// Bound on the covariance between two condition totals: the identified
/// cross-condition pair sum minus the never-identified own-unit term.
pub fn covariance_bound(
    e: &ExposureMatrix,
    y: &[f64],
    probs: &ExposureProbabilities,
    k: usize,
    l: usize,
) -> Result<f64> {
    covariance_bound_masked(e, y, probs, k, l, &vec![true; e.n()])
}

fn covariance_bound_masked(
    e: &ExposureMatrix,
    y: &[f64],
    probs: &ExposureProbabilities,
    k: usize,
    l: usize,
    mask: &[bool],
) -> Result<f64> {
    if !probs.has_joint() {
        return Err(Error::Probability(
            "covariance estimation requires joint probabilities; tally them with want_joint"
                .into(),
        ));
    }
    let sk = condition_slice(e, y, probs, k, mask)?;
    let sl = condition_slice(e, y, probs, l, mask)?;
    let inv_r = probs.inv_r();

    let mut cross = 0.0;
    for (a, &i) in sk.units.iter().enumerate() {
        let row = probs.joint_row(k, l, i);
        for (b, &j) in sl.units.iter().enumerate() {
            if i == j {
                continue;
            }
            let count = row[j];
            if count == 0 {
                continue;
            }
            let pij = count as f64 * inv_r;
            let pi_pj = sk.pi[a] * sl.pi[b];
            cross += (pij - pi_pj) / pij * sk.weighted[a] * sl.weighted[b];
        }
    }

    let mut own = 0.0;
    for (a, &unit) in sk.units.iter().enumerate() {
        own += y[unit] * y[unit] / (2.0 * sk.pi[a]);
    }
    for (b, &unit) in sl.units.iter().enumerate() {
        own += y[unit] * y[unit] / (2.0 * sl.pi[b]);
    }
    Ok(cross - own)
}

/// Conservative variance of the Horvitz-Thompson contrast:
/// (Var_k + Var_l - 2 Cov) / basis^2.
pub fn ht_contrast_variance(
    e: &ExposureMatrix,
    y: &[f64],
    probs: &ExposureProbabilities,
    k: usize,
    l: usize,
    opts: EstimateOptions,
) -> Result<f64> {
    let (mask, basis) = eligibility(probs, &[k, l], opts.restrict_to_positive);
    if basis == 0 {
        return Err(Error::Probability("no unit is eligible for both conditions".into()));
    }
    let var_k = conservative_variance_masked(e, y, probs, k, &mask)?;
    let var_l = conservative_variance_masked(e, y, probs, l, &mask)?;
    let cov = covariance_bound_masked(e, y, probs, k, l, &mask)?;
    Ok((var_k + var_l - 2.0 * cov) / (basis as f64 * basis as f64))
}

/// Constant-effects variance: impute every unit's outcome in conditions
/// `k` and `l` by shifting its observed outcome by the Hajek condition-mean
/// differences, then re-estimate the contrast under fresh assignment draws
/// and report the spread of those estimates.
///
/// Uses the population variance when `redraws` enumerates the support (the
/// redistribution is exact) and the sample variance otherwise. A single
/// redraw yields the degenerate 0.
#[allow(clippy::too_many_arguments)]
pub fn constant_effects_variance(
    mapper: &ExposureMapper,
    e: &ExposureMatrix,
    y: &[f64],
    probs: &ExposureProbabilities,
    redraws: &AssignmentSet,
    k: usize,
    l: usize,
    opts: EstimateOptions,
) -> Result<Option<f64>> {
    let n = e.n();
    if redraws.n != n {
        return Err(Error::Parameter(format!(
            "redraw vectors cover {} units, outcomes cover {n}",
            redraws.n
        )));
    }
    let (mask, basis) = eligibility(probs, &[k, l], opts.restrict_to_positive);
    if basis == 0 {
        return Ok(None);
    }
    let mean_k = hajek_mean_masked(e, y, probs, k, &mask)?;
    let mean_l = hajek_mean_masked(e, y, probs, l, &mask)?;
    let (Some(mean_k), Some(mean_l)) = (mean_k, mean_l) else {
        return Ok(None);
    };
    // Every unit's own condition is realized by construction, so its Hajek
    // mean exists whenever the unit is eligible.
    let mut mean_of = vec![f64::NAN; probs.condition_count()];
    mean_of[k] = mean_k;
    mean_of[l] = mean_l;
    for unit in 0..n {
        let c = e.condition(unit);
        if mask[unit] && mean_of[c].is_nan() {
            mean_of[c] = hajek_mean_masked(e, y, probs, c, &mask)?
                .expect("realized condition has a defined mean");
        }
    }
    let imputed_k: Vec<f64> = (0..n).map(|u| y[u] + mean_k - mean_of[e.condition(u)]).collect();
    let imputed_l: Vec<f64> = (0..n).map(|u| y[u] + mean_l - mean_of[e.condition(u)]).collect();

    let mut estimates = Vec::with_capacity(redraws.len());
    for z in &redraws.vectors {
        let exposure = mapper.map(z)?;
        let mut total_k = 0.0;
        let mut total_l = 0.0;
        for unit in 0..n {
            if !mask[unit] {
                continue;
            }
            let c = exposure.condition(unit);
            if c == k {
                let p = probs.individual(k, unit);
                if p > 0.0 {
                    total_k += imputed_k[unit] / p;
                }
            } else if c == l {
                let p = probs.individual(l, unit);
                if p > 0.0 {
                    total_l += imputed_l[unit] / p;
                }
            }
        }
        estimates.push((total_k - total_l) / basis as f64);
    }
    if estimates.len() == 1 {
        return Ok(Some(0.0));
    }
    let variance = if redraws.design_kind == DesignKind::Enumerated {
        population_variance(&estimates)
    } else {
        sample_variance(&estimates)
    };
    Ok(Some(variance))
}

/// The reported Horvitz-Thompson variance: the pointwise maximum of the
/// conservative and constant-effects estimates, falling back to whichever
/// side is defined.
pub fn reported_variance(
    conservative: Option<f64>,
    constant_effects: Option<f64>,
) -> Option<(f64, VarianceKind)> {
    match (conservative, constant_effects) {
        (Some(a), Some(b)) => Some((a.max(b), VarianceKind::Max)),
        (Some(a), None) => Some((a, VarianceKind::Conservative)),
        (None, Some(b)) => Some((b, VarianceKind::ConstantEffects)),
        (None, None) => None,
    }
}

/// Hajek contrast point estimate: difference of the two condition means.
pub fn hajek_contrast(
    e: &ExposureMatrix,
    y: &[f64],
    probs: &ExposureProbabilities,
    k: usize,
    l: usize,
    opts: EstimateOptions,
) -> Result<Option<f64>> {
    let (mask, _) = eligibility(probs, &[k, l], opts.restrict_to_positive);
    let mk = hajek_mean_masked(e, y, probs, k, &mask)?;
    let ml = hajek_mean_masked(e, y, probs, l, &mask)?;
    Ok(match (mk, ml) {
        (Some(a), Some(b)) => Some(a - b),
        _ => None,
    })
}

/// Taylor-linearized variance of the Hajek contrast: the conservative
/// machinery applied to within-condition residuals, normalized by the
/// estimated condition sizes `N_hat(c) = sum 1/pi` in place of N. Each
/// condition's own-variance part carries the n/(n-1) inflation that undoes
/// the deflation from residualizing against the estimated mean; a
/// single-unit condition contributes only its correction terms.
pub fn hajek_contrast_variance(
    e: &ExposureMatrix,
    y: &[f64],
    probs: &ExposureProbabilities,
    k: usize,
    l: usize,
    opts: EstimateOptions,
) -> Result<Option<f64>> {
    let (mask, _) = eligibility(probs, &[k, l], opts.restrict_to_positive);
    let sk = condition_slice(e, y, probs, k, &mask)?;
    let sl = condition_slice(e, y, probs, l, &mask)?;
    if sk.units.is_empty() || sl.units.is_empty() {
        return Ok(None);
    }
    let nhat_k: f64 = sk.pi.iter().map(|p| 1.0 / p).sum();
    let nhat_l: f64 = sl.pi.iter().map(|p| 1.0 / p).sum();
    let mu_k = sk.weighted.iter().sum::<f64>() / nhat_k;
    let mu_l = sl.weighted.iter().sum::<f64>() / nhat_l;

    let mut residuals = vec![0.0; e.n()];
    for &unit in &sk.units {
        residuals[unit] = y[unit] - mu_k;
    }
    for &unit in &sl.units {
        residuals[unit] = y[unit] - mu_l;
    }

    let dof = |count: usize| {
        if count >= 2 {
            count as f64 / (count as f64 - 1.0)
        } else {
            1.0
        }
    };
    let var_k = dof(sk.units.len()) * conservative_variance_masked(e, &residuals, probs, k, &mask)?;
    let var_l = dof(sl.units.len()) * conservative_variance_masked(e, &residuals, probs, l, &mask)?;
    let cov = covariance_bound_masked(e, &residuals, probs, k, l, &mask)?;
    Ok(Some(var_k / (nhat_k * nhat_k) + var_l / (nhat_l * nhat_l)
        - 2.0 * cov / (nhat_k * nhat_l)))
}

/// Normal-approximation interval `point ± z_{1-alpha/2} sqrt(variance)`.
pub fn confidence_interval(point: f64, variance: f64, alpha: f64) -> Result<(f64, f64)> {
    if variance < 0.0 {
        return Err(Error::Integrity(format!(
            "negative variance {variance} reached the interval step"
        )));
    }
    if !(0.0..1.0).contains(&alpha) || alpha == 0.0 {
        return Err(Error::Parameter(format!("alpha must be in (0,1), got {alpha}")));
    }
    let half = normal_quantile(1.0 - alpha / 2.0) * variance.sqrt();
    Ok((point - half, point + half))
}

/// Full Horvitz-Thompson report for one contrast. `redraws` enables the
/// constant-effects side of the max-rule variance; without it the
/// conservative estimate is reported alone.
#[allow(clippy::too_many_arguments)]
pub fn estimate_ht(
    mapper: &ExposureMapper,
    e: &ExposureMatrix,
    y: &[f64],
    probs: &ExposureProbabilities,
    k: usize,
    l: usize,
    redraws: Option<&AssignmentSet>,
    opts: EstimateOptions,
) -> Result<EstimateReport> {
    let contrast = ht_contrast(e, y, probs, k, l, opts)?;
    let mut report = EstimateReport {
        estimator: EstimatorKind::HorvitzThompson,
        k: probs.spec.label(k).to_string(),
        l: probs.spec.label(l).to_string(),
        point: contrast.point,
        variance: None,
        variance_kind: VarianceKind::Unavailable,
        ci_low: None,
        ci_high: None,
        alpha: opts.alpha,
        defined: contrast.defined,
        total_k: contrast.total_k,
        total_l: contrast.total_l,
        mean_k: (contrast.count_k > 0).then(|| contrast.total_k / contrast.basis as f64),
        mean_l: (contrast.count_l > 0).then(|| contrast.total_l / contrast.basis as f64),
        count_k: contrast.count_k,
        count_l: contrast.count_l,
    };
    if !contrast.defined {
        return Ok(report);
    }

    let conservative = ht_contrast_variance(e, y, probs, k, l, opts)?;
    let constant = match redraws {
        Some(set) => constant_effects_variance(mapper, e, y, probs, set, k, l, opts)?,
        None => None,
    };
    if let Some((variance, kind)) = reported_variance(Some(conservative), constant) {
        let floored = variance.max(0.0);
        report.variance = Some(floored);
        report.variance_kind = kind;
        let (lo, hi) = confidence_interval(contrast.point.unwrap(), floored, opts.alpha)?;
        report.ci_low = Some(lo);
        report.ci_high = Some(hi);
    }
    Ok(report)
}

/// Full Hajek report for one contrast with the linearized variance.
pub fn estimate_hajek(
    e: &ExposureMatrix,
    y: &[f64],
    probs: &ExposureProbabilities,
    k: usize,
    l: usize,
    opts: EstimateOptions,
) -> Result<EstimateReport> {
    let (mask, _) = eligibility(probs, &[k, l], opts.restrict_to_positive);
    let mean_k = hajek_mean_masked(e, y, probs, k, &mask)?;
    let mean_l = hajek_mean_masked(e, y, probs, l, &mask)?;
    let point = match (mean_k, mean_l) {
        (Some(a), Some(b)) => Some(a - b),
        _ => None,
    };
    let sk = condition_slice(e, y, probs, k, &mask)?;
    let sl = condition_slice(e, y, probs, l, &mask)?;
    let mut report = EstimateReport {
        estimator: EstimatorKind::Hajek,
        k: probs.spec.label(k).to_string(),
        l: probs.spec.label(l).to_string(),
        point,
        variance: None,
        variance_kind: VarianceKind::Unavailable,
        ci_low: None,
        ci_high: None,
        alpha: opts.alpha,
        defined: point.is_some(),
        total_k: sk.weighted.iter().sum(),
        total_l: sl.weighted.iter().sum(),
        mean_k,
        mean_l,
        count_k: sk.units.len(),
        count_l: sl.units.len(),
    };
    if let Some(point) = point {
        if let Some(variance) = hajek_contrast_variance(e, y, probs, k, l, opts)? {
            let floored = variance.max(0.0);
            report.variance = Some(floored);
            report.variance_kind = VarianceKind::Linearized;
            let (lo, hi) = confidence_interval(point, floored, opts.alpha)?;
            report.ci_low = Some(lo);
            report.ci_high = Some(hi);
        }
    }
    Ok(report)
}

#[cfg(test)]
#[allow(clippy::needless_range_loop)]
mod tests {
    use super::*;
    use crate::exposure::ExposureMappingSpec;

    /// Build a 4-unit hop1-style scaffold with hand-set conditions and
    /// probabilities (uniform 1/3 unless overridden).
    fn scaffold(
        conditions: Vec<usize>,
        individual: Vec<u32>,
        replicates: usize,
    ) -> (ExposureMatrix, ExposureProbabilities) {
        let spec = ExposureMappingSpec::hop1();
        let n = conditions.len();
        let e = ExposureMatrix { spec, conditions };
        let p = ExposureProbabilities::from_counts(spec, n, replicates, true, individual, None)
            .unwrap();
        (e, p)
    }

    #[test]
    fn ht_total_hand_arithmetic() {
        // Units 1 and 3 realized in condition 0 with Y = 2, 4 and pi = 1/3:
        // total = 6 + 12 = 18.
        let n = 4;
        let mut individual = vec![0u32; 4 * n];
        for unit in 0..n {
            individual[unit] = 1; // condition 0 count = 1 of 3
            individual[3 * n + unit] = 2; // remainder in the baseline
        }
        let (e, p) = scaffold(vec![3, 0, 3, 0], individual, 3);
        let y = vec![0.0, 2.0, 0.0, 4.0];
        let total = ht_total(&e, &y, &p, 0).unwrap();
        assert!((total - 18.0).abs() < 1e-12);
    }

    #[test]
    fn ht_total_zero_probability_realized_is_an_error() {
        let n = 2;
        let mut individual = vec![0u32; 4 * n];
        individual[0] = 0; // unit 0, condition 0: probability zero
        individual[1] = 1;
        individual[3 * n] = 3;
        individual[3 * n + 1] = 2;
        let (e, p) = scaffold(vec![0, 3], individual, 3);
        assert!(matches!(
            ht_total(&e, &[1.0, 1.0], &p, 0),
            Err(Error::Probability(_))
        ));
    }

    #[test]
    fn ht_total_degenerate_design_sums_outcomes() {
        let n = 3;
        let mut individual = vec![0u32; 4 * n];
        for unit in 0..n {
            individual[unit] = 5; // pi(cond 0) = 1 for everyone
        }
        let (e, p) = scaffold(vec![0, 0, 0], individual, 5);
        let y = vec![1.5, 2.5, 3.0];
        assert!((ht_total(&e, &y, &p, 0).unwrap() - 7.0).abs() < 1e-12);
    }

    #[test]
    fn ht_contrast_three_unit_path_example() {
        // Path scaffold: condition 2 holds units {0, 2} with Y = (2, 4);
        // condition 1 holds unit {1} with Y = 3; all probabilities 1/3;
        // tau(1, 2) = (9 - 18) / 3 = -3.
        let n = 3;
        let mut individual = vec![0u32; 4 * n];
        for unit in 0..n {
            individual[n + unit] = 1; // condition 1
            individual[2 * n + unit] = 1; // condition 2
            individual[3 * n + unit] = 1; // condition 3
        }
        let (e, p) = scaffold(vec![2, 1, 2], individual, 3);
        let y = vec![2.0, 3.0, 4.0];
        let c = ht_contrast(&e, &y, &p, 1, 2, EstimateOptions::default()).unwrap();
        assert!((c.point.unwrap() + 3.0).abs() < 1e-12);
        assert!((c.total_k - 9.0).abs() < 1e-12);
        assert!((c.total_l - 18.0).abs() < 1e-12);
    }

    #[test]
    fn ht_contrast_trivial_cases() {
        let n = 3;
        let mut individual = vec![0u32; 4 * n];
        for unit in 0..n {
            individual[n + unit] = 1;
            individual[2 * n + unit] = 2;
        }
        let (e, p) = scaffold(vec![1, 2, 2], individual, 3);
        let zeros = vec![0.0; 3];
        let c = ht_contrast(&e, &zeros, &p, 1, 2, EstimateOptions::default()).unwrap();
        assert_eq!(c.point.unwrap(), 0.0);
        let same = ht_contrast(&e, &[1.0, 2.0, 3.0], &p, 1, 1, EstimateOptions::default())
            .unwrap();
        assert_eq!(same.point.unwrap(), 0.0);
    }

    #[test]
    fn ht_contrast_undefined_when_condition_empty() {
        let n = 3;
        let mut individual = vec![0u32; 4 * n];
        for unit in 0..n {
            individual[unit] = 1; // condition 0 possible
            individual[2 * n + unit] = 1;
            individual[3 * n + unit] = 1;
        }
        let (e, p) = scaffold(vec![2, 2, 3], individual, 3);
        let c = ht_contrast(&e, &[1.0, 1.0, 1.0], &p, 0, 3, EstimateOptions::default())
            .unwrap();
        assert!(!c.defined);
        assert!(c.point.is_none());
        assert_eq!(c.total_k, 0.0);
    }

    #[test]
    fn hajek_mean_hand_cases() {
        let n = 4;
        let mut individual = vec![0u32; 4 * n];
        for unit in 0..n {
            individual[unit] = 1;
            individual[3 * n + unit] = 2;
        }
        let (e, p) = scaffold(vec![0, 0, 3, 3], individual, 3);
        // Equal probabilities: weights cancel to the sample mean.
        let y = vec![2.0, 4.0, 9.0, 9.0];
        assert!((hajek_mean(&e, &y, &p, 0).unwrap().unwrap() - 3.0).abs() < 1e-12);
        // Single realized unit: its own outcome.
        let (e1, p1) = {
            let mut ind = vec![0u32; 4 * n];
            for unit in 0..n {
                ind[unit] = 1;
                ind[3 * n + unit] = 2;
            }
            scaffold(vec![0, 3, 3, 3], ind, 3)
        };
        assert!(
            (hajek_mean(&e1, &[7.25, 0.0, 0.0, 0.0], &p1, 0).unwrap().unwrap() - 7.25).abs()
                < 1e-12
        );
        // Empty condition: undefined.
        assert!(hajek_mean(&e1, &[0.0; 4], &p1, 1).unwrap().is_none());
    }

    #[test]
    fn hajek_mean_with_unequal_weights() {
        // Units with pi = (1/2, 1/4): mean = (2*2 + 4*4) / (2 + 4) = 20/6.
        let n = 2;
        let mut individual = vec![0u32; 4 * n];
        individual[0] = 2; // unit 0 cond 0: 2/4
        individual[1] = 1; // unit 1 cond 0: 1/4
        individual[3 * n] = 2;
        individual[3 * n + 1] = 3;
        let (e, p) = scaffold(vec![0, 0], individual, 4);
        let y = vec![2.0, 4.0];
        let m = hajek_mean(&e, &y, &p, 0).unwrap().unwrap();
        assert!((m - 20.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn confidence_interval_values() {
        let (lo, hi) = confidence_interval(0.0, 1.0, 0.05).unwrap();
        assert!((lo + 1.959_964).abs() < 1e-5);
        assert!((hi - 1.959_964).abs() < 1e-5);

        let (lo, hi) = confidence_interval(3.25, 0.0, 0.05).unwrap();
        assert_eq!((lo, hi), (3.25, 3.25));

        let wide = confidence_interval(0.0, 1.0, 0.05).unwrap();
        let narrow = confidence_interval(0.0, 1.0, 0.32).unwrap();
        assert!(narrow.0 > wide.0 && narrow.1 < wide.1);

        assert!(confidence_interval(0.0, -1e-9, 0.05).is_err());
    }

    #[test]
    fn reported_variance_max_rule() {
        assert_eq!(
            reported_variance(Some(2.0), Some(3.0)),
            Some((3.0, VarianceKind::Max))
        );
        assert_eq!(
            reported_variance(Some(5.0), Some(5.0)),
            Some((5.0, VarianceKind::Max))
        );
        assert_eq!(
            reported_variance(Some(2.0), None),
            Some((2.0, VarianceKind::Conservative))
        );
        assert_eq!(
            reported_variance(None, Some(4.0)),
            Some((4.0, VarianceKind::ConstantEffects))
        );
        assert_eq!(reported_variance(None, None), None);
    }
}
