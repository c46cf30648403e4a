mod common;

use std::collections::HashSet;
use std::sync::Arc;

use hyperdolphin::data::{gen_queries, gen_sphere};
use hyperdolphin::search::{brute_force_near, hamming_ball, metric_distance};
use hyperdolphin::{Dataset, FamilySpec, HypercubeIndex, Key, Metric, QueryParams};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{binomial, l2_double_double, naive_near};

fn rows(data: &Dataset) -> Vec<Vec<f64>> {
    data.iter().map(<[f64]>::to_vec).collect()
}

#[test]
fn ball_of_radius_four_in_ten_dims() {
    let center = Key::new(0b1011001110, 10).unwrap();
    let ball: Vec<Key> = hamming_ball(center, 10, 4).unwrap().collect();
    assert_eq!(ball.len(), 386);
    let distinct: HashSet<u64> = ball.iter().map(|k| k.bits()).collect();
    let expected: HashSet<u64> = (0..1024u64).filter(|b| (b ^ center.bits()).count_ones() <= 4).collect();
    assert_eq!(distinct, expected);
    let dists: Vec<u32> = ball.iter().map(|k| k.hamming_distance(center)).collect();
    assert!(dists.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn ball_sizes_match_binomial_sums() {
    for dprime in [1u32, 5, 13, 20] {
        for rho in 0..=dprime.min(4) {
            let count = hamming_ball(Key::new(0, dprime).unwrap(), dprime, rho).unwrap().count() as u64;
            let expected: u64 = (0..=rho as u64).map(|i| binomial(dprime as u64, i)).sum();
            assert_eq!(count, expected, "d'={dprime} rho={rho}");
        }
    }
    let top: Vec<Key> = hamming_ball(Key::new(u64::MAX, 64).unwrap(), 64, 1).unwrap().collect();
    assert_eq!(top.len(), 65);
}

#[test]
fn brute_force_matches_naive_oracle() {
    let data = gen_sphere(500, 16, 0.1, 1).unwrap();
    let pts = rows(&data);
    let queries = gen_queries(&data, 100, 0.5, None, 2).unwrap();
    for q in queries.points.iter() {
        for (metric, r, l1) in [(Metric::L2, 1.0, false), (Metric::L1, 3.0, true)] {
            let got: Vec<(u32, f64)> =
                brute_force_near(&data, q, r, metric).unwrap().iter().map(|n| (n.id, n.distance)).collect();
            let want = naive_near(&pts, q, r, l1);
            assert_eq!(got.len(), want.len());
            for (g, w) in got.iter().zip(&want) {
                assert_eq!(g.0, w.0);
                assert!((g.1 - w.1).abs() <= 1e-12 * w.1.max(1.0));
            }
        }
    }
}

#[test]
fn l2_distance_matches_extended_precision() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..1000 {
        let d = rng.random_range(1..300);
        let scale = 10f64.powi(rng.random_range(-3..4));
        let p: Vec<f64> = (0..d).map(|_| rng.random_range(-scale..scale)).collect();
        let q: Vec<f64> = (0..d).map(|_| rng.random_range(-scale..scale)).collect();
        let got = metric_distance(&p, &q, Metric::L2).unwrap();
        let want = l2_double_double(&p, &q);
        assert!((got - want).abs() <= 1e-12 * want, "{got} vs {want}");
    }
}

fn check_complete(index: &HypercubeIndex, data: &Dataset, queries: &Dataset, r: f64, metric: Metric) {
    let params = QueryParams::new(r, data.len()).with_rho_max(index.dprime());
    for q in queries.iter() {
        let oracle = brute_force_near(data, q, r, metric).unwrap();
        let all = index.query_all_near(q, &params).unwrap();
        assert_eq!(all.neighbors, oracle);
        let decision = index.query_decision(q, &params).unwrap();
        assert_eq!(decision.witness.is_some(), !oracle.is_empty());
        if let Some(w) = decision.witness {
            assert!(w.distance <= r);
        }
    }
}

#[test]
fn full_budget_is_exact_l2() {
    let data = Arc::new(gen_sphere(10_000, 32, 0.1, 4).unwrap());
    let queries = gen_queries(&data, 100, 0.5, None, 5).unwrap();
    let index = HypercubeIndex::build(data.clone(), 13, FamilySpec::random_line(2.0), 6).unwrap();
    check_complete(&index, &data, &queries.points, 1.0, Metric::L2);
}

#[test]
fn full_budget_is_exact_l1_and_hyperplane() {
    let data = Arc::new(gen_sphere(2000, 16, 0.0, 7).unwrap());
    let queries = gen_queries(&data, 50, 0.5, None, 8).unwrap();
    let grid = HypercubeIndex::build(data.clone(), 10, FamilySpec::grid_l1_for(2000, 2.0), 9).unwrap();
    check_complete(&grid, &data, &queries.points, 2.0, Metric::L1);
    let hp = HypercubeIndex::build(data.clone(), 10, FamilySpec::Hyperplane { k: 2 }, 9).unwrap();
    // hyperplane hashing needs unit queries
    let unit: Vec<Vec<f64>> = queries
        .points
        .iter()
        .map(|q| {
            let n = q.iter().map(|x| x * x).sum::<f64>().sqrt();
            q.iter().map(|x| x / n).collect()
        })
        .collect();
    check_complete(&hp, &data, &Dataset::from_rows(&unit).unwrap(), 0.8, Metric::L2);
}

#[test]
fn budget_bounds_candidates() {
    let data = Arc::new(gen_sphere(5000, 16, 0.1, 10).unwrap());
    let index = HypercubeIndex::build(data.clone(), 12, FamilySpec::random_line(2.0), 11).unwrap();
    let queries = gen_queries(&data, 50, 0.0, None, 12).unwrap();
    for t in [1usize, 7, 100] {
        for q in queries.points.iter() {
            let out = index.query_all_near(q, &QueryParams::new(0.01, t)).unwrap();
            assert!(out.stats.candidates_examined <= t);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn larger_budget_extends_results(seed in any::<u64>(), t1 in 1usize..400, extra in 0usize..400) {
        let data = Arc::new(gen_sphere(400, 8, 0.2, seed).unwrap());
        let index = HypercubeIndex::build(data.clone(), 8, FamilySpec::random_line(2.0), seed).unwrap();
        let queries = gen_queries(&data, 5, 0.5, Some(0.3), seed ^ 1).unwrap();
        let t2 = t1 + extra;
        for q in queries.points.iter() {
            let small = index.query_all_near(q, &QueryParams::new(1.0, t1)).unwrap();
            let large = index.query_all_near(q, &QueryParams::new(1.0, t2)).unwrap();
            let big: HashSet<u32> = large.neighbors.iter().map(|n| n.id).collect();
            prop_assert!(small.neighbors.iter().all(|n| big.contains(&n.id)));
            let d_small = index.query_decision(q, &QueryParams::new(1.0, t1)).unwrap();
            let d_large = index.query_decision(q, &QueryParams::new(1.0, t2)).unwrap();
            prop_assert!(d_small.witness.is_none() || d_large.witness.is_some());
        }
    }
}
