//! Property tests: leverage-score laws, inverse-square-root residuals, and
//! byte-stable serialization round trips.

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;
use linalg_core::{
    inv_sqrt, leverage_scores, read_matrix, read_vector, scaled_gram, write_matrix,
    write_vector, SplitSeed, Tolerances,
};

/// Random Gaussian tall matrix; full rank with probability 1.
fn random_tall(seed: u64, n: usize, d: usize) -> DMatrix<f64> {
    let mut rng = SplitSeed::new(seed).rng();
    DMatrix::from_fn(n, d, |_, _| rng.sample(StandardNormal))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Leverage scores lie in [0, 1] and sum to d.
    #[test]
    fn leverage_range_and_sum(seed in 0u64..1_000, n in 3usize..40, d in 1usize..6) {
        let d = d.min(n);
        let a = random_tall(seed, n, d);
        let tau = leverage_scores(&a, &Tolerances::default()).unwrap();
        for &t in tau.iter() {
            prop_assert!(t >= 0.0 && t <= 1.0 + 1e-9, "score out of range: {t}");
        }
        let sum: f64 = tau.iter().sum();
        prop_assert!((sum - d as f64).abs() < 1e-8, "sum {sum} vs d {d}");
    }

    /// Leverage scores are invariant under any invertible column transform
    /// (they depend only on the column space).
    #[test]
    fn leverage_column_space_invariance(seed in 0u64..1_000) {
        let a = random_tall(seed, 12, 3);
        let mut rng = SplitSeed::new(seed ^ 0xabc).rng();
        // Random well-conditioned 3×3: identity plus a small perturbation.
        let g = DMatrix::from_fn(3, 3, |i, j| {
            let noise: f64 = rng.sample(StandardNormal);
            if i == j { 1.0 + 0.1 * noise } else { 0.1 * noise }
        });
        let tau_a = leverage_scores(&a, &Tolerances::default()).unwrap();
        let tau_ag = leverage_scores(&(&a * &g), &Tolerances::default()).unwrap();
        for i in 0..12 {
            prop_assert!((tau_a[i] - tau_ag[i]).abs() < 1e-8);
        }
    }

    /// inv_sqrt residual: ‖R M R − I‖ ≤ 1e-8 on random SPD matrices.
    #[test]
    fn inv_sqrt_residual(seed in 0u64..1_000, d in 1usize..8) {
        let b = random_tall(seed, d + 3, d);
        let m = b.transpose() * &b; // SPD with probability 1
        let r = inv_sqrt(&m, &Tolerances::default()).unwrap();
        let resid = &r * &m * &r - DMatrix::identity(d, d);
        prop_assert!(resid.norm() <= 1e-8, "residual {}", resid.norm());
    }

    /// Gram translation law on random instances.
    #[test]
    fn gram_translation(seed in 0u64..1_000, alpha in -2.0f64..2.0) {
        let a = random_tall(seed, 10, 3);
        let mut rng = SplitSeed::new(seed ^ 0x55).rng();
        let t = DVector::from_fn(10, |_, _| rng.random_range(-1.0..1.0));
        let z = scaled_gram(&a, &t);
        let z_shift = scaled_gram(&a, &t.map(|x| x + alpha));
        let scale = alpha.exp();
        for i in 0..3 {
            for j in 0..3 {
                let want = scale * z[(i, j)];
                prop_assert!((z_shift[(i, j)] - want).abs() <= 1e-12 * want.abs().max(1e-9));
            }
        }
    }
}

#[test]
fn matrix_roundtrip_is_bit_exact() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.txt");
    let a = random_tall(7, 9, 4);
    write_matrix(&path, &a).unwrap();
    let b = read_matrix(&path).unwrap();
    assert_eq!(a, b, "shortest-roundtrip formatting must reproduce bits");

    // A second write of the re-read matrix is byte-identical.
    let path2 = dir.path().join("m2.txt");
    write_matrix(&path2, &b).unwrap();
    assert_eq!(
        std::fs::read(&path).unwrap(),
        std::fs::read(&path2).unwrap()
    );
}

#[test]
fn vector_roundtrip_is_bit_exact() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("v.txt");
    let mut rng = SplitSeed::new(3).rng();
    let v = DVector::from_fn(17, |_, _| {
        let x: f64 = rng.sample(StandardNormal);
        x * 1e3
    });
    write_vector(&path, &v).unwrap();
    let w = read_vector(&path).unwrap();
    assert_eq!(v, w);
}

#[test]
fn parse_error_carries_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.txt");
    std::fs::write(&path, "2 2\n1.0 2.0\n3.0 oops\n").unwrap();
    let err = read_matrix(&path).unwrap_err();
    let msg = format!("{err}");
    assert!(msg.contains(":3:"), "expected line 3 in `{msg}`");
}
