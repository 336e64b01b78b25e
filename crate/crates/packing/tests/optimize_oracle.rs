//! End-to-end optimizer checks on a menagerie of small graphs: feasibility
//! of the returned point, the measured approximation ratio against the
//! brute-force ray optimum, and both directions of bound rejection.

use nalgebra::DMatrix;
use packing::{packing_optimize, reference_config, PackingError, PackingInstance, SupportMask};
use linalg_core::{pinv_sqrt, SplitSeed};
use rand::Rng;
use soc::Partition;

const CAP: usize = 500;

fn path_laplacian(n: usize) -> DMatrix<f64> {
    let mut l = DMatrix::zeros(n, n);
    for v in 0..n - 1 {
        add_edge(&mut l, v, v + 1);
    }
    l
}

fn star_laplacian(n: usize) -> DMatrix<f64> {
    let mut l = DMatrix::zeros(n, n);
    for v in 1..n {
        add_edge(&mut l, 0, v);
    }
    l
}

/// Random tree by uniform attachment.
fn tree_laplacian(n: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = SplitSeed::new(seed).rng();
    let mut l = DMatrix::zeros(n, n);
    for v in 1..n {
        let parent = rng.random_range(0..v);
        add_edge(&mut l, parent, v);
    }
    l
}

fn add_edge(l: &mut DMatrix<f64>, u: usize, v: usize) {
    l[(u, u)] += 1.0;
    l[(v, v)] += 1.0;
    l[(u, v)] -= 1.0;
    l[(v, u)] -= 1.0;
}

fn complement_ones(n: usize) -> DMatrix<f64> {
    DMatrix::identity(n, n) - DMatrix::from_element(n, n, 1.0 / n as f64)
}

fn lambda_max(m: &DMatrix<f64>) -> f64 {
    m.clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Brute-force ray optimum: the best feasible multiple of the indicator,
/// `|E_c| / λ_max(𝒜(c))` — a lower bound on the optimum that small
/// instances can certify exactly.
fn ray_optimum(p_dense: &DMatrix<f64>, mask: &SupportMask) -> f64 {
    let inst = PackingInstance::new(p_dense, mask.clone(), 1e-6, 1e6).unwrap();
    let a_c = inst.a_dense(&mask.initial_iterate(), CAP).unwrap().unwrap();
    mask.edge_count() as f64 / lambda_max(&a_c)
}

/// A certified upper bound from the trace: feasibility forces
/// `Σ_e x_e·Tr(A_e) = Tr(𝒜(x)) ≤ n`.
fn trace_upper_bound(p_dense: &DMatrix<f64>, mask: &SupportMask) -> f64 {
    let n = mask.n();
    let mut min_tr = f64::INFINITY;
    for u in 0..n {
        for v in u + 1..n {
            if mask.contains(u, v) {
                let chi = p_dense.column(u) - p_dense.column(v);
                min_tr = min_tr.min(chi.dot(&chi));
            }
        }
    }
    assert!(min_tr > 1e-12, "a supported pair vanished under P: value unbounded");
    n as f64 / min_tr * (1.0 + 1e-9)
}

/// Shared per-instance audit: feasibility within `1e-8`, value at least the
/// ray optimum, ratio contract `value·q_run ≥ OPT ≥ ray`, ordered bounds.
fn audit(p_dense: &DMatrix<f64>, mask: SupportMask, tag: u64) {
    let ray = ray_optimum(p_dense, &mask);
    let upper = trace_upper_bound(p_dense, &mask);
    let lower = 0.9 * ray;
    let inst = PackingInstance::new(p_dense, mask, lower, upper).unwrap();
    let out = packing_optimize(&inst, 0.1, SplitSeed::new(tag), &reference_config()).unwrap();

    let dense_x = inst.a_dense(&out.x, CAP).unwrap().unwrap();
    let lam = lambda_max(&dense_x);
    assert!(lam <= 1.0 + 1e-8, "instance {tag}: λ_max(𝒜(x)) = {lam}");
    assert!(out.value >= ray * (1.0 - 1e-9), "instance {tag}: value {} < ray {ray}", out.value);
    assert!(
        out.value * out.q_run >= ray * (1.0 - 1e-9),
        "instance {tag}: certified ceiling fell below the ray optimum"
    );
    assert!(out.q_run >= 1.0 - 1e-9, "instance {tag}: ratio below one");
    assert!(out.bounds.0 <= out.bounds.1 * (1.0 + 1e-9), "instance {tag}: inverted bounds");
    assert!(!out.phases.is_empty() && out.phases.len() <= 9);
    assert!((out.value - out.x.pair_mass()).abs() <= 1e-9 * (1.0 + out.value));
}

#[test]
fn ray_certified_values_on_paths() {
    for (i, n) in [2usize, 4, 6, 9, 12].into_iter().enumerate() {
        let eye = DMatrix::identity(n, n);
        audit(&eye, SupportMask::Soc(Partition::full(n)), 100 + i as u64);
        let p = pinv_sqrt(&(path_laplacian(n) + 0.2 * complement_ones(n)), 1e-10);
        audit(&p, SupportMask::Soc(Partition::full(n)), 110 + i as u64);
    }
}

#[test]
fn ray_certified_values_on_stars() {
    for (i, n) in [3usize, 5, 8, 12].into_iter().enumerate() {
        let eye = DMatrix::identity(n, n);
        audit(&eye, SupportMask::Soc(Partition::full(n)), 200 + i as u64);
        let p = pinv_sqrt(&(star_laplacian(n) + 0.2 * complement_ones(n)), 1e-10);
        audit(&p, SupportMask::Soc(Partition::full(n)), 210 + i as u64);
    }
}

#[test]
fn ray_certified_values_on_random_trees() {
    for (i, n) in [5usize, 7, 10, 12].into_iter().enumerate() {
        for rep in 0..2u64 {
            let l = tree_laplacian(n, 1000 + 10 * i as u64 + rep);
            let p = pinv_sqrt(&(l + 0.15 * complement_ones(n)), 1e-10);
            audit(&p, SupportMask::Soc(Partition::full(n)), 300 + 10 * i as u64 + rep);
        }
    }
}

/// Split supports exercise the masked representation end to end.
#[test]
fn ray_certified_values_on_split_supports() {
    let n = 10;
    let eye = DMatrix::identity(n, n);
    let halves = Partition::new(n, vec![(0..5).collect(), (5..10).collect()]).unwrap();
    audit(&eye, SupportMask::Soc(halves.clone()), 400);
    audit(&eye, SupportMask::Asoc(soc::AsocRep::new(halves)), 401);
}

/// `u = ℓ` means the caller already knows the optimum: exactly one
/// extraction run, and the ratio collapses to one.
#[test]
fn exactly_known_bounds_run_one_extraction_phase() {
    // One unit edge: 𝒜(x) = x·L_e with λ_max(L_e) = 2, so OPT = ½ exactly.
    let eye = DMatrix::identity(2, 2);
    let inst = PackingInstance::new(&eye, SupportMask::Soc(Partition::full(2)), 0.5, 0.5).unwrap();
    let out = packing_optimize(&inst, 0.1, SplitSeed::new(8), &reference_config()).unwrap();
    assert_eq!(out.phases.len(), 1, "known optimum needs a single decision run");
    assert!((out.value - 0.5).abs() <= 1e-9);
    assert!(out.q_run <= 1.0 + 1e-9);
    assert!(out.lambda_max <= 1.0 + 1e-8);
}

/// An upper bound below a value the indicator ray already achieves is
/// rejected immediately.
#[test]
fn upper_bound_below_the_ray_value_is_rejected() {
    let eye = DMatrix::identity(2, 2);
    let inst = PackingInstance::new(&eye, SupportMask::Soc(Partition::full(2)), 0.3, 0.4).unwrap();
    let err = packing_optimize(&inst, 0.1, SplitSeed::new(9), &reference_config()).unwrap_err();
    assert!(matches!(err, PackingError::InconsistentBounds { .. }), "got {err}");
}

/// The regularized inverse-root projector from the sparsification pipeline:
/// `P = (L + Δ·Π)^{−1/2}` on a path, the exact shape the outer solver feeds
/// in. The optimizer must return a feasible point at least as good as the
/// ray optimum.
#[test]
fn regularized_inverse_root_instance_is_solved_feasibly() {
    let n = 6;
    let delta = 0.05;
    let base = path_laplacian(n) + delta * complement_ones(n);
    let p = pinv_sqrt(&base, 1e-10);
    // P annihilates the all-ones direction…
    let ones = DMatrix::from_element(n, 1, 1.0);
    assert!((&p * &ones).abs().max() <= 1e-9);
    audit(&p, SupportMask::Soc(Partition::full(n)), 500);
}
