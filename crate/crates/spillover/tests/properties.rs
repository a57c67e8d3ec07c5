//! Property tests over randomized inputs.
#![allow(clippy::needless_range_loop)]

use proptest::prelude::*;

use spillover::design::{
    cluster_randomization, complete_randomization, enumerate_support, epsilon_net_clustering,
    two_stage_assignment, ClusterDesign,
};
use spillover::exposure::{exposure_probabilities, map_exposures, ExposureMappingSpec};
use spillover::netgraph::generate_small_world;
use spillover::stats::{binomial, round_half_even};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn small_world_invariants(
        n in 6usize..40,
        half_degree in 1usize..3,
        rewire in 0.0f64..=1.0,
        seed in 0u64..1000,
    ) {
        let mean_degree = 2 * half_degree;
        prop_assume!(mean_degree < n);
        let g = generate_small_world(n, mean_degree, rewire, seed).unwrap();
        prop_assert_eq!(g.edge_count(), n * mean_degree / 2);
        for &(u, v) in g.edges() {
            prop_assert!(u < v && v < n);
            prop_assert!(g.has_edge(u, v) && g.has_edge(v, u));
        }
        let total: usize = (0..n).map(|u| g.degree(u)).sum();
        prop_assert_eq!(total, n * mean_degree);
    }

    #[test]
    fn removed_ties_are_a_subset(
        seed in 0u64..500,
        proportion in 0.0f64..=1.0,
    ) {
        let g = generate_small_world(20, 4, 0.3, seed).unwrap();
        let pruned = g.remove_ties(proportion, seed).unwrap();
        prop_assert_eq!(
            pruned.edge_count(),
            g.edge_count() - round_half_even(proportion * g.edge_count() as f64)
        );
        for &(u, v) in pruned.edges() {
            prop_assert!(g.has_edge(u, v));
        }
    }

    #[test]
    fn second_degree_avoids_closed_neighborhood(
        seed in 0u64..500,
        unit in 0usize..20,
    ) {
        let g = generate_small_world(20, 4, 0.4, seed).unwrap();
        for &two in &g.second_degree_set(unit) {
            prop_assert!(two != unit);
            prop_assert!(!g.has_edge(unit, two));
        }
    }

    #[test]
    fn complete_randomization_treated_count_is_constant(
        n in 4usize..30,
        r in 1usize..20,
        seed in 0u64..1000,
    ) {
        let p = 0.3;
        let expected = round_half_even(p * n as f64);
        prop_assume!(expected >= 1 && expected < n);
        let set = complete_randomization(n, p, r, seed, true).unwrap();
        for z in &set.vectors {
            prop_assert_eq!(z.iter().map(|&b| b as usize).sum::<usize>(), expected);
        }
    }

    #[test]
    fn enumerated_support_counts_match_binomials(
        n in 3usize..12,
        m in 1usize..4,
    ) {
        prop_assume!(m < n);
        let p = m as f64 / n as f64;
        prop_assume!(round_half_even(p * n as f64) == m);
        let set = enumerate_support(n, p).unwrap();
        prop_assert_eq!(set.len() as u128, binomial(n, m));
        let mut seen = std::collections::HashSet::new();
        for z in &set.vectors {
            prop_assert!(seen.insert(z.clone()));
        }
    }

    #[test]
    fn cluster_vectors_are_constant_within_clusters(
        seed in 0u64..300,
        p in 0.2f64..0.8,
    ) {
        let g = generate_small_world(30, 4, 0.2, seed).unwrap();
        let clustering = epsilon_net_clustering(&g, 3, seed).unwrap();
        let set =
            cluster_randomization(&clustering, p, 10, seed, ClusterDesign::Bernoulli).unwrap();
        for z in &set.vectors {
            for (unit, &label) in clustering.labels.iter().enumerate() {
                prop_assert_eq!(z[unit], z[clustering.centers[label]]);
            }
        }
    }

    #[test]
    fn epsilon_net_centers_separated_and_covering(
        seed in 0u64..200,
        epsilon in 2usize..5,
    ) {
        let g = generate_small_world(40, 4, 0.2, seed).unwrap();
        let c = epsilon_net_clustering(&g, epsilon, seed).unwrap();
        let dists: Vec<Vec<usize>> = c.centers.iter().map(|&u| g.bfs_distances(u)).collect();
        for a in 0..c.centers.len() {
            for b in (a + 1)..c.centers.len() {
                prop_assert!(dists[a][c.centers[b]] >= epsilon);
            }
        }
        for unit in 0..40 {
            let nearest = dists.iter().map(|d| d[unit]).min().unwrap();
            prop_assert!(nearest < epsilon);
            prop_assert_eq!(dists[c.labels[unit]][unit], nearest);
        }
    }

    #[test]
    fn exposure_probabilities_partition(
        seed in 0u64..200,
    ) {
        let g = generate_small_world(15, 4, 0.3, seed).unwrap();
        let draws = complete_randomization(15, 0.2, 40, seed, false).unwrap();
        for spec in [
            ExposureMappingSpec::no_interference(),
            ExposureMappingSpec::hop1(),
            ExposureMappingSpec::hop2(),
            ExposureMappingSpec::full_neighborhood(),
        ] {
            let p = exposure_probabilities(&g, &draws, spec, false).unwrap();
            for unit in 0..15 {
                let total: f64 =
                    (0..spec.condition_count()).map(|c| p.individual(c, unit)).sum();
                prop_assert!((total - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn exposure_rows_are_onehot(
        seed in 0u64..200,
        treated_seed in 0u64..50,
    ) {
        let g = generate_small_world(15, 4, 0.3, seed).unwrap();
        let set = complete_randomization(15, 0.2, 1, treated_seed, true).unwrap();
        let e = map_exposures(&g, &set.vectors[0], ExposureMappingSpec::hop2()).unwrap();
        for unit in 0..15 {
            let ones: usize = (0..8).map(|c| usize::from(e.indicator(unit, c))).sum();
            prop_assert_eq!(ones, 1);
        }
    }

    #[test]
    fn two_stage_counts_match_arm_saturations(
        seed in 0u64..300,
        groups in 2usize..6,
        group_size in 3usize..8,
    ) {
        let group_of: Vec<usize> = (0..groups * group_size).map(|u| u / group_size).collect();
        let (psi, phi) = (2.0 / 3.0, 1.0 / 3.0);
        let a = two_stage_assignment(&group_of, psi, phi, 0.5, seed);
        prop_assume!(a.is_ok());
        let a = a.unwrap();
        for gid in 0..groups {
            let treated: usize = (0..group_of.len())
                .filter(|&u| group_of[u] == gid)
                .map(|u| a.z[u] as usize)
                .sum();
            let sat = a.saturation_of_group(gid);
            prop_assert_eq!(treated, round_half_even(sat * group_size as f64));
        }
    }
}
