//! Spectral sandwiches for the sampling sparsifiers, checked against dense
//! assemblies via generalized eigenvalues.

use linalg_core::{pencil_extremes, SplitSeed};
use nalgebra::DMatrix;
use rand::Rng;
use soc::{sparsify_bipartite, sparsify_clique_asoc, Partition, SparseLaplacian, SparsifyConfig};

/// Dense Laplacian of the complete bipartite graph L × R.
fn dense_bipartite(n: usize, left: &[usize], right: &[usize]) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    for &u in left {
        for &v in right {
            m[(u, u)] += 1.0;
            m[(v, v)] += 1.0;
            m[(u, v)] -= 1.0;
            m[(v, u)] -= 1.0;
        }
    }
    m
}

/// Dense Laplacian of all cross-piece cliques of a partition.
fn dense_multipartite(p: &Partition) -> DMatrix<f64> {
    let n = p.n();
    let mut m = DMatrix::zeros(n, n);
    let pieces = p.pieces();
    for i in 0..pieces.len() {
        for j in 0..i {
            m += dense_bipartite(n, &pieces[i], &pieces[j]);
        }
    }
    m
}

/// Whether `approx` is within `e^{±1}` of `exact` spectrally.
fn within_e(approx: &SparseLaplacian, exact: &DMatrix<f64>) -> bool {
    let (lo, hi) = pencil_extremes(&approx.to_dense(), exact, 1e-9);
    lo >= (-1.0f64).exp() && hi <= 1.0f64.exp()
}

#[test]
fn bipartite_20_20_sandwich() {
    let left: Vec<usize> = (0..20).collect();
    let right: Vec<usize> = (20..40).collect();
    let exact = dense_bipartite(40, &left, &right);
    let mut rng = SplitSeed::new(4242).rng();
    let lap = sparsify_bipartite(40, &left, &right, 0.01, &mut rng, &SparsifyConfig::default());
    assert!(within_e(&lap, &exact), "spectral sandwich failed at δ = 0.01");
    // nnz ≤ m by construction.
    let m = (9.0 * 40.0 * (40.0f64 / 0.01).ln()).ceil() as usize;
    assert!(lap.nnz() <= m);
}

#[test]
fn unbalanced_bipartite_sandwich() {
    // |L| = 3, |R| = 37: uniform sampling regardless of class sizes.
    let left: Vec<usize> = (0..3).collect();
    let right: Vec<usize> = (3..40).collect();
    let exact = dense_bipartite(40, &left, &right);
    let mut rng = SplitSeed::new(7).rng();
    let lap = sparsify_bipartite(40, &left, &right, 0.01, &mut rng, &SparsifyConfig::default());
    assert!(within_e(&lap, &exact));
}

#[test]
fn multipartite_five_pieces_sandwich() {
    // ℓ = 5 random pieces over |S| = 60.
    let mut rng = SplitSeed::new(99).rng();
    let mut membership = vec![0usize; 60];
    for m in membership.iter_mut() {
        *m = rng.random_range(1..=5);
    }
    let p = Partition::from_membership(membership).unwrap();
    let exact = dense_multipartite(&p);
    let lap = sparsify_clique_asoc(&p, 0.01, SplitSeed::new(100), &SparsifyConfig::default());
    assert!(within_e(&lap, &exact), "five-piece recursion must sandwich");
}

#[test]
fn two_pieces_single_bipartite_call() {
    let p = Partition::new(10, vec![(0..4).collect(), (4..10).collect()]).unwrap();
    let exact = dense_multipartite(&p);
    let lap = sparsify_clique_asoc(&p, 0.05, SplitSeed::new(3), &SparsifyConfig::default());
    assert!(within_e(&lap, &exact));
    // Exactly one bipartite call: total weight |L||R| = 24 preserved.
    assert!((lap.total_weight() - 24.0).abs() < 1e-9);
}

#[test]
fn heavy_piece_branch_sandwich() {
    // One piece of 30 out of 40 forces the heavy-piece recursion.
    let p = Partition::new(
        40,
        vec![(0..30).collect(), (30..35).collect(), (35..40).collect()],
    )
    .unwrap();
    let exact = dense_multipartite(&p);
    let lap = sparsify_clique_asoc(&p, 0.01, SplitSeed::new(17), &SparsifyConfig::default());
    assert!(within_e(&lap, &exact));
}

/// Empirical failure rate at δ = 0.1 stays ≤ 0.15 over 200 seeds
/// (binomial slack above the nominal 0.1).
#[test]
fn failure_rate_within_binomial_slack() {
    let p = Partition::new(
        30,
        vec![(0..8).collect(), (8..17).collect(), (17..24).collect(), (24..30).collect()],
    )
    .unwrap();
    let exact = dense_multipartite(&p);
    let mut failures = 0usize;
    for seed in 0..200 {
        let lap = sparsify_clique_asoc(&p, 0.1, SplitSeed::new(seed), &SparsifyConfig::default());
        if !within_e(&lap, &exact) {
            failures += 1;
        }
    }
    assert!(failures <= 30, "failure rate {failures}/200 exceeds 0.15");
}

#[test]
fn tsv_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("lap.tsv");
    let lap = SparseLaplacian::new(6, vec![(0, 3, 1.25), (2, 5, 0.5), (1, 4, 2.0)]).unwrap();
    lap.write_tsv(&path).unwrap();
    let back = SparseLaplacian::read_tsv(&path, 6).unwrap();
    assert_eq!(lap, back);
    // Second write is byte-identical.
    let path2 = dir.path().join("lap2.tsv");
    back.write_tsv(&path2).unwrap();
    assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(&path2).unwrap());
}
