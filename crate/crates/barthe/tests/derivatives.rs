//! Frozen derivative values and finite-difference oracles.
//!
//! Central differences with step 1e-6 balance truncation (O(h²)) against
//! roundoff (O(eps/h)) at f64, giving ~1e-10 absolute accuracy — far tighter
//! than the 1e-5 agreement asserted here.

use barthe::{gradient, hessian_dense, hessian_matvec, objective, RegularizedObjective, ScalingState};
use linalg_core::{Dataset, SplitSeed, Tolerances};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

const FD_STEP: f64 = 1e-6;

fn three_row_instance() -> Dataset {
    let s = 1.0 / 2.0_f64.sqrt();
    let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, s, s]);
    Dataset::new(a, DVector::from_element(3, 2.0 / 3.0)).unwrap()
}

/// Random instance with unit-ish rows (Gaussian rows, normalized, plus a
/// small perturbation so no special structure survives).
fn random_instance(seed: u64, n: usize, d: usize) -> (Dataset, DVector<f64>) {
    let mut rng = SplitSeed::new(seed).rng();
    let mut a = DMatrix::from_fn(n, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    for i in 0..n {
        let norm = a.row(i).norm();
        for j in 0..d {
            a[(i, j)] /= norm;
        }
    }
    let ds = Dataset::with_uniform_marginals(a).unwrap();
    let t = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
    (ds, t)
}

fn fd_gradient(ds: &Dataset, t: &DVector<f64>) -> DVector<f64> {
    let n = t.len();
    DVector::from_fn(n, |i, _| {
        let mut plus = t.clone();
        plus[i] += FD_STEP;
        let mut minus = t.clone();
        minus[i] -= FD_STEP;
        (objective(ds, &plus).unwrap() - objective(ds, &minus).unwrap()) / (2.0 * FD_STEP)
    })
}

#[test]
fn frozen_three_row_objective_and_gradient() {
    // Z(0) = [[3/2, 1/2], [1/2, 3/2]], det = 2, so f(0) = ln 2.
    // Leverage scores at t = 0 are (3/4, 3/4, 1/2), c = 2/3 each, so
    // ∇f(0) = (3/4 − 2/3, 3/4 − 2/3, 1/2 − 2/3) = (1/12, 1/12, −1/6).
    let ds = three_row_instance();
    let t0 = DVector::zeros(3);
    let f0 = objective(&ds, &t0).unwrap();
    assert!((f0 - 2.0_f64.ln()).abs() < 1e-12, "f(0) = {f0}");

    let st = ScalingState::new(&ds, &t0, &Tolerances::default()).unwrap();
    let g = gradient(&ds, &st);
    assert!((g[0] - 1.0 / 12.0).abs() < 1e-12);
    assert!((g[1] - 1.0 / 12.0).abs() < 1e-12);
    assert!((g[2] + 1.0 / 6.0).abs() < 1e-12);
}

#[test]
fn gradient_matches_finite_differences() {
    for seed in 0..20 {
        let (ds, t) = random_instance(seed, 12, 3);
        let st = ScalingState::new(&ds, &t, &Tolerances::default()).unwrap();
        let g = gradient(&ds, &st);
        let fd = fd_gradient(&ds, &t);
        for i in 0..ds.n() {
            let scale = g[i].abs().max(1.0);
            assert!(
                (g[i] - fd[i]).abs() <= 1e-5 * scale,
                "seed {seed} entry {i}: analytic {} vs fd {}",
                g[i],
                fd[i]
            );
        }
    }
}

#[test]
fn hessian_dense_matches_gradient_differences() {
    let ds = three_row_instance();
    let t0 = DVector::zeros(3);
    let st = ScalingState::new(&ds, &t0, &Tolerances::default()).unwrap();
    let h = hessian_dense(&st, 5000).unwrap();
    for j in 0..3 {
        let mut plus = t0.clone();
        plus[j] += FD_STEP;
        let mut minus = t0.clone();
        minus[j] -= FD_STEP;
        let gp = {
            let s = ScalingState::new(&ds, &plus, &Tolerances::default()).unwrap();
            gradient(&ds, &s)
        };
        let gm = {
            let s = ScalingState::new(&ds, &minus, &Tolerances::default()).unwrap();
            gradient(&ds, &s)
        };
        for i in 0..3 {
            let fd = (gp[i] - gm[i]) / (2.0 * FD_STEP);
            assert!(
                (h[(i, j)] - fd).abs() < 1e-5,
                "H[{i},{j}] = {} vs fd {fd}",
                h[(i, j)]
            );
        }
    }
}

#[test]
fn matvec_matches_dense_path() {
    // n = 50, d = 5 random states: relative agreement 1e-10.
    for seed in 100..110 {
        let (ds, t) = random_instance(seed, 50, 5);
        let st = ScalingState::new(&ds, &t, &Tolerances::default()).unwrap();
        let h = hessian_dense(&st, 5000).unwrap();
        let mut rng = SplitSeed::new(seed ^ 0xfeed).rng();
        let v = DVector::from_fn(50, |_, _| rng.sample::<f64, _>(StandardNormal));
        let dense = &h * &v;
        let fast = hessian_matvec(&st, &v);
        let scale = dense.norm().max(1e-30);
        assert!(
            (&dense - &fast).norm() <= 1e-10 * scale,
            "seed {seed}: relative deviation {}",
            (&dense - &fast).norm() / scale
        );
    }
}

#[test]
fn shift_invariance() {
    let (ds, t) = random_instance(7, 15, 4);
    let f = objective(&ds, &t).unwrap();
    for alpha in [-2.0, -0.3, 0.9, 5.0] {
        let shifted = t.map(|x| x + alpha);
        let fs = objective(&ds, &shifted).unwrap();
        assert!((f - fs).abs() < 1e-9, "alpha {alpha}: {f} vs {fs}");
    }
}

#[test]
fn gradient_sums_to_zero() {
    for seed in 0..10 {
        let (ds, t) = random_instance(seed, 20, 4);
        let st = ScalingState::new(&ds, &t, &Tolerances::default()).unwrap();
        let g = gradient(&ds, &st);
        let total: f64 = g.iter().sum();
        assert!(total.abs() < 1e-9, "seed {seed}: ⟨∇f, 1⟩ = {total}");
    }
}

#[test]
fn partition_of_identity_residual() {
    for seed in 0..10 {
        let (ds, t) = random_instance(seed, 25, 4);
        let st = ScalingState::new(&ds, &t, &Tolerances::default()).unwrap();
        assert!(
            st.partition_residual() < 1e-8,
            "seed {seed}: Σ M_i far from I: {}",
            st.partition_residual()
        );
    }
}

#[test]
fn regularized_gradient_matches_finite_differences() {
    let (ds, t) = random_instance(42, 12, 3);
    let reg = RegularizedObjective::with_lambda(0.37);
    let st = ScalingState::new(&ds, &t, &Tolerances::default()).unwrap();
    let g = reg.gradient(&ds, &st);
    for i in 0..12 {
        let mut plus = t.clone();
        plus[i] += FD_STEP;
        let mut minus = t.clone();
        minus[i] -= FD_STEP;
        let fd = (reg.value(&ds, &plus).unwrap() - reg.value(&ds, &minus).unwrap())
            / (2.0 * FD_STEP);
        assert!((g[i] - fd).abs() < 1e-5, "entry {i}: {} vs {fd}", g[i]);
    }
}

#[test]
fn regularized_matvec_consistent_with_dense() {
    let (ds, t) = random_instance(9, 30, 4);
    let reg = RegularizedObjective::from_driver(0.1, ds.c_min(), 8.0);
    let st = ScalingState::new(&ds, &t, &Tolerances::default()).unwrap();
    let mut h = hessian_dense(&st, 5000).unwrap();
    reg.add_to_dense(&mut h);
    let mut rng = SplitSeed::new(11).rng();
    let v = DVector::from_fn(30, |_, _| rng.sample::<f64, _>(StandardNormal));
    let want = &h * &v;
    let got = reg.hessian_matvec(&st, &v);
    assert!((&want - &got).norm() <= 1e-10 * want.norm().max(1e-30));
}
