//! Monte-Carlo rate checks for the rounding primitives, with 3-standard-error
//! slack, plus exact assertions for the deterministic guarantees.

use gridhash::{grid_partition, interval_partition_1d, PointCloud};
use linalg_core::SplitSeed;
use nalgebra::DMatrix;
use rand::Rng;

const TRIALS: usize = 100_000;

/// Three standard errors of a Bernoulli estimate at `p̂` over `n` trials.
fn three_se(p_hat: f64, n: usize) -> f64 {
    3.0 * (p_hat * (1.0 - p_hat) / n as f64).sqrt()
}

#[test]
fn separation_rate_bounded_by_two_sqrt_k_distance() {
    // Two 1-d points at distance 0.3, boxes of side 1: the separation
    // probability is at most 2·√1·0.3 = 0.6.
    let cloud = PointCloud::new(DMatrix::from_row_slice(2, 1, &[0.0, 0.3])).unwrap();
    let mut separated = 0usize;
    for seed in 0..TRIALS {
        let p = grid_partition(&cloud, 1.0, &mut SplitSeed::new(seed as u64).rng());
        if !p.same_piece(0, 1) {
            separated += 1;
        }
    }
    let rate = separated as f64 / TRIALS as f64;
    assert!(
        rate <= 0.6 + three_se(rate, TRIALS),
        "separation rate {rate} exceeds 0.6 plus slack"
    );
}

#[test]
fn separation_bound_holds_in_higher_dimension() {
    // Distance √2·0.2 in R²: bound (2√2/1)·(0.2√2) = 0.8.
    let cloud = PointCloud::new(DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.2, 0.2])).unwrap();
    let dist = cloud.squared_distance(0, 1).sqrt();
    let bound = 2.0 * (2.0f64).sqrt() * dist;
    let mut separated = 0usize;
    for seed in 0..TRIALS {
        let p = grid_partition(&cloud, 1.0, &mut SplitSeed::new(seed as u64).rng());
        if !p.same_piece(0, 1) {
            separated += 1;
        }
    }
    let rate = separated as f64 / TRIALS as f64;
    assert!(rate <= bound + three_se(rate, TRIALS));
}

#[test]
fn coincident_points_never_separated() {
    let cloud =
        PointCloud::new(DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 1.0, 2.0, 5.0, 5.0])).unwrap();
    for seed in 0..2_000 {
        let p = grid_partition(&cloud, 0.5, &mut SplitSeed::new(seed).rng());
        assert!(p.same_piece(0, 1), "distance-zero pair split at seed {seed}");
    }
}

#[test]
fn same_piece_distance_cap_on_random_clouds() {
    // ‖q_u − q_v‖ ≤ ρ√k for co-partitioned pairs — exact, every seed.
    let mut gen = SplitSeed::new(77).rng();
    let coords: Vec<f64> = (0..90).map(|_| gen.random::<f64>() * 4.0).collect();
    let cloud = PointCloud::new(DMatrix::from_row_slice(30, 3, &coords)).unwrap();
    let rho = 0.9;
    let cap2 = rho * rho * 3.0;
    for seed in 0..200 {
        let p = grid_partition(&cloud, rho, &mut SplitSeed::new(seed).rng());
        for u in 0..30 {
            for v in 0..u {
                if p.same_piece(u, v) {
                    assert!(cloud.squared_distance(u, v) <= cap2 + 1e-12);
                }
            }
        }
    }
}

#[test]
fn interval_split_rate_for_matched_band() {
    // |q_u − q_v| = 1.6ρ ∈ [1.5ρ, 2ρ): both kept in different pieces with
    // probability at least ¼.
    let values = [0.0, 1.6];
    let mut hits = 0usize;
    for seed in 0..TRIALS {
        let (kept, p) = interval_partition_1d(&values, 1.0, &mut SplitSeed::new(seed as u64).rng());
        if kept.len() == 2 && !p.same_piece(0, 1) {
            hits += 1;
        }
    }
    let rate = hits as f64 / TRIALS as f64;
    assert!(
        rate >= 0.25 - three_se(rate, TRIALS),
        "split rate {rate} below 0.25 minus slack"
    );
}

#[test]
fn close_pairs_never_cross_pieces() {
    // |q_u − q_v| ≤ ρ ⇒ same piece or not both kept — exact, every seed,
    // including pairs straddling an interval boundary.
    let mut gen = SplitSeed::new(5).rng();
    for case in 0..50 {
        let base: f64 = gen.random::<f64>() * 10.0 - 5.0;
        let gap: f64 = gen.random::<f64>(); // ≤ ρ = 1
        let values = [base, base + gap, base - 3.7, base + 2.2];
        for seed in 0..500 {
            let (kept, p) =
                interval_partition_1d(&values, 1.0, &mut SplitSeed::new(case * 1000 + seed).rng());
            if kept.contains(&0) && kept.contains(&1) {
                assert!(p.same_piece(0, 1), "close pair split (case {case}, seed {seed})");
            }
        }
    }
}

#[test]
fn kept_set_halves_on_average() {
    // Sanity on the color swap: a fixed point is kept about half the time.
    let values = [0.42];
    let mut kept_count = 0usize;
    for seed in 0..TRIALS {
        let (kept, _) = interval_partition_1d(&values, 1.0, &mut SplitSeed::new(seed as u64).rng());
        kept_count += kept.len();
    }
    let rate = kept_count as f64 / TRIALS as f64;
    assert!((rate - 0.5).abs() <= three_se(rate, TRIALS));
}
