//! Brute-force enumeration of a tiny two-stage design: under a
//! no-interference outcome model the indirect effect averages to zero
//! over the full randomization distribution.

use spillover::hierarchical::{marginal_effects, HierarchicalDataset, HierarchicalRow};

#[test]
fn indirect_effect_is_mean_zero_without_interference() {
    // Two groups of two units; each group treats exactly one unit; one
    // group per arm. Outcomes depend only on the unit's own assignment:
    // y_i(z) = b_i + 2 z.
    let baselines = [0.3, 1.1, 0.7, 1.9];
    let group_of = [0usize, 0, 1, 1];
    let effect = 2.0;

    let mut indirect = Vec::new();
    let mut totals = Vec::new();
    let mut direct_psi = Vec::new();
    for psi_group in 0..2usize {
        for treated_g0 in 0..2usize {
            for treated_g1 in 2..4usize {
                let rows: Vec<HierarchicalRow> = (0..4)
                    .map(|unit| {
                        let z = u8::from(unit == treated_g0 || unit == treated_g1);
                        HierarchicalRow {
                            group: group_of[unit],
                            group_tr: u8::from(group_of[unit] == psi_group),
                            indiv_tr: z,
                            obs_outcome: baselines[unit] + effect * z as f64,
                        }
                    })
                    .collect();
                let report =
                    marginal_effects(&HierarchicalDataset::new(rows).unwrap(), 0.05).unwrap();
                indirect.push(report.indirect_hat.unwrap());
                totals.push(report.total_hat.unwrap());
                direct_psi.push(report.direct_psi_hat.unwrap());
                // The estimator identity holds replicate by replicate.
                let identity = report.direct_psi_hat.unwrap() + report.indirect_hat.unwrap();
                assert!((report.total_hat.unwrap() - identity).abs() < 1e-12);
            }
        }
    }

    let avg = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    assert_eq!(indirect.len(), 8);
    assert!(avg(&indirect).abs() < 1e-12, "indirect mean {}", avg(&indirect));
    // Direct and total effects average to the constant own-treatment shift.
    assert!((avg(&direct_psi) - effect).abs() < 1e-12);
    assert!((avg(&totals) - effect).abs() < 1e-12);
}
