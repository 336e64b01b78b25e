//! Dense kernels: leverage scores, scaled Gram matrices, inverse square
//! roots, and the radial-isotropy certificate.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use thiserror::Error;

use crate::config::Tolerances;

/// Errors raised by the dense kernels.
#[derive(Debug, Error)]
pub enum LinalgError {
    /// The pivoted QR found a pivot below the relative threshold: the row
    /// matrix does not have full column rank.
    #[error("rank deficient: pivot {pivot} below {threshold} at column {column}")]
    RankDeficient {
        column: usize,
        pivot: f64,
        threshold: f64,
    },
    /// Inverse square root refused: eigenvalue ratio below the guard.
    #[error("ill conditioned: min eigenvalue {min_eig} vs max {max_eig}")]
    IllConditioned { min_eig: f64, max_eig: f64 },
    /// A transformed row collapsed to (numerical) zero, so it cannot be
    /// normalized onto the sphere.
    #[error("degenerate row {row}: transformed norm {norm}")]
    DegenerateRow { row: usize, norm: f64 },
    /// Shape mismatch between operands.
    #[error("dimension mismatch: {context}")]
    DimensionMismatch { context: String },
}

/// Outcome of checking `exp(-ε)·I ⪯ Σ_i c_i u_i u_i^T ⪯ exp(ε)·I` for the
/// normalized transformed rows `u_i = R a_i / ‖R a_i‖`.
///
/// Serialized field order is the declaration order below and is stable.
#[derive(Debug, Clone, Serialize)]
pub struct SpectralCertificate {
    /// Smallest eigenvalue of the weighted outer-product sum.
    pub lambda_min: f64,
    /// Largest eigenvalue of the weighted outer-product sum.
    pub lambda_max: f64,
    /// Tolerance the certificate was checked at.
    pub epsilon: f64,
    /// Smallest ε' for which the check would pass:
    /// `max(ln λ_max, −ln λ_min)`.
    pub epsilon_achieved: f64,
    /// Whether both eigenvalue bounds hold at `epsilon`.
    pub pass: bool,
}

/// Leverage scores `τ_i = a_i^T (A^T A)^{-1} a_i` of a tall matrix.
///
/// Computed from a column-pivoted QR factorization: with `A P = Q R` and `Q`
/// having orthonormal columns spanning `col(A)`, each score is the squared
/// Euclidean norm of the corresponding row of `Q`. This avoids forming the
/// Gram inverse and is exact for the score definition whenever `A` has full
/// column rank.
///
/// # Arguments
///
/// * `a` — tall matrix, `n ≥ d`.
/// * `tol` — rank-detection thresholds; see [`Tolerances::pivot_rel`].
///
/// # Returns
///
/// The length-`n` score vector; entries lie in `[0, 1]` and sum to `d` in
/// exact arithmetic.
///
/// # Errors
///
/// [`LinalgError::RankDeficient`] when a QR pivot falls below the relative
/// threshold.
pub fn leverage_scores(a: &DMatrix<f64>, tol: &Tolerances) -> Result<DVector<f64>, LinalgError> {
    let (n, d) = (a.nrows(), a.ncols());
    if n < d {
        return Err(LinalgError::DimensionMismatch {
            context: format!("leverage scores need n >= d, got {n} x {d}"),
        });
    }
    // 1. Column-pivoted QR; the pivoting makes |r_11| >= |r_22| >= … so the
    //    relative pivot test below is meaningful for rank detection.
    let qr = a.clone().col_piv_qr();
    let r = qr.r();
    let lead = r[(0, 0)].abs();
    for column in 0..d {
        let pivot = r[(column, column)].abs();
        if pivot < tol.pivot_rel * lead || lead == 0.0 {
            return Err(LinalgError::RankDeficient {
                column,
                pivot,
                threshold: tol.pivot_rel * lead,
            });
        }
    }
    // 2. τ_i = ‖row i of Q‖² for the thin factor Q ∈ R^{n×d}.
    let q = qr.q();
    let mut tau = DVector::zeros(n);
    for i in 0..n {
        tau[i] = q.row(i).norm_squared();
    }
    Ok(tau)
}

/// Scaled Gram matrix `Z(t) = Σ_i exp(t_i) a_i a_i^T = A^T diag(exp t) A`.
///
/// Computed as `B^T B` with `B = diag(exp(t/2)) A`, which keeps the result
/// exactly symmetric PSD in floating point.
///
/// # Arguments
///
/// * `a` — row matrix `A ∈ R^{n×d}`.
/// * `t` — length-`n` scaling exponents.
///
/// # Returns
///
/// The `d×d` matrix `Z(t)`.
pub fn scaled_gram(a: &DMatrix<f64>, t: &DVector<f64>) -> DMatrix<f64> {
    assert_eq!(
        a.nrows(),
        t.len(),
        "scaling vector length must match row count"
    );
    let mut b = a.clone();
    for i in 0..a.nrows() {
        let s = (0.5 * t[i]).exp();
        for j in 0..a.ncols() {
            b[(i, j)] *= s;
        }
    }
    b.transpose() * &b
}

/// Symmetric inverse square root `M^{-1/2}` of an SPD matrix.
///
/// # Arguments
///
/// * `m` — symmetric positive-definite matrix.
/// * `tol` — conditioning guard; see [`Tolerances::eig_ratio`].
///
/// # Returns
///
/// The symmetric matrix `R` with `R M R = I` up to roundoff.
///
/// # Errors
///
/// [`LinalgError::IllConditioned`] when `λ_min ≤ eig_ratio · λ_max` (the
/// inversion would amplify noise rather than information).
pub fn inv_sqrt(m: &DMatrix<f64>, tol: &Tolerances) -> Result<DMatrix<f64>, LinalgError> {
    assert_eq!(m.nrows(), m.ncols(), "inverse square root needs a square matrix");
    // 1. Symmetric eigendecomposition M = V diag(λ) V^T.
    let eig = m.clone().symmetric_eigen();
    let max_eig = eig.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min_eig = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(min_eig > tol.eig_ratio * max_eig) || min_eig <= 0.0 {
        return Err(LinalgError::IllConditioned { min_eig, max_eig });
    }
    // 2. R = V diag(λ^{-1/2}) V^T, re-symmetrized against roundoff drift.
    let mut scaled = eig.eigenvectors.clone();
    for (j, lambda) in eig.eigenvalues.iter().enumerate() {
        let w = lambda.powf(-0.25);
        for i in 0..scaled.nrows() {
            scaled[(i, j)] *= w;
        }
    }
    // With columns scaled by λ^{-1/4}, R = scaled · scaledᵀ is symmetric by
    // construction and equals V diag(λ^{-1/2}) V^T.
    Ok(&scaled * scaled.transpose())
}

/// Pseudo-inverse square root `M^{+1/2}` of a symmetric PSD matrix.
///
/// Eigenvalues at or below `rank_tol · λ_max` are treated as exactly zero
/// (their directions map to zero); the rest are raised to the −1/2 power.
/// Unlike [`inv_sqrt`] this accepts rank-deficient inputs, which is how
/// graph-Laplacian preconditioners (null direction `1`) are built.
pub fn pinv_sqrt(m: &DMatrix<f64>, rank_tol: f64) -> DMatrix<f64> {
    assert_eq!(m.nrows(), m.ncols(), "pseudo-inverse square root needs a square matrix");
    let eig = m.clone().symmetric_eigen();
    let max_eig = eig
        .eigenvalues
        .iter()
        .cloned()
        .fold(0.0_f64, |acc, x| acc.max(x.abs()));
    let cut = rank_tol * max_eig;
    let mut scaled = eig.eigenvectors.clone();
    for (j, lambda) in eig.eigenvalues.iter().enumerate() {
        let w = if *lambda > cut { lambda.powf(-0.25) } else { 0.0 };
        for i in 0..scaled.nrows() {
            scaled[(i, j)] *= w;
        }
    }
    &scaled * scaled.transpose()
}

/// Checks whether `R` puts `(A, c)` in (c, ε)-radial isotropic position.
///
/// Forms `M = Σ_i c_i (R a_i)(R a_i)^T / ‖R a_i‖²` and compares its extreme
/// eigenvalues against `[exp(-ε), exp(ε)]`.
///
/// # Arguments
///
/// * `a`, `c` — the dataset rows and marginals.
/// * `r` — candidate transform, `d×d`.
/// * `epsilon` — certificate tolerance.
/// * `tol` — degeneracy guard for transformed row norms.
///
/// # Returns
///
/// A [`SpectralCertificate`] with the extreme eigenvalues and the verdict.
///
/// # Errors
///
/// [`LinalgError::DegenerateRow`] when some `‖R a_i‖` vanishes numerically;
/// [`LinalgError::DimensionMismatch`] on shape errors.
pub fn verify_rip(
    a: &DMatrix<f64>,
    c: &DVector<f64>,
    r: &DMatrix<f64>,
    epsilon: f64,
    tol: &Tolerances,
) -> Result<SpectralCertificate, LinalgError> {
    let (n, d) = (a.nrows(), a.ncols());
    if r.nrows() != d || r.ncols() != d {
        return Err(LinalgError::DimensionMismatch {
            context: format!("transform is {}x{}, expected {d}x{d}", r.nrows(), r.ncols()),
        });
    }
    if c.len() != n {
        return Err(LinalgError::DimensionMismatch {
            context: format!("marginal length {} vs row count {n}", c.len()),
        });
    }
    // 1. Transformed rows as the rows of B = A R^T (row i is (R a_i)^T).
    let b = a * r.transpose();
    // 2. M = B^T diag(c_i / ‖b_i‖²) B, assembled via a scaled copy of B so
    //    the product is symmetric by construction.
    let mut scaled = b.clone();
    for i in 0..n {
        let norm_sq = b.row(i).norm_squared();
        if norm_sq.sqrt() < tol.degenerate_row {
            return Err(LinalgError::DegenerateRow {
                row: i,
                norm: norm_sq.sqrt(),
            });
        }
        let w = (c[i] / norm_sq).sqrt();
        for j in 0..d {
            scaled[(i, j)] *= w;
        }
    }
    let m = scaled.transpose() * &scaled;
    // 3. Extreme eigenvalues against the two-sided exp(±ε) band.
    let eig = m.symmetric_eigen();
    let lambda_max = eig.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lambda_min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    let epsilon_achieved = if lambda_min > 0.0 {
        lambda_max.ln().max(-(lambda_min.ln()))
    } else {
        f64::INFINITY
    };
    let pass = lambda_min >= (-epsilon).exp() && lambda_max <= epsilon.exp();
    Ok(SpectralCertificate {
        lambda_min,
        lambda_max,
        epsilon,
        epsilon_achieved,
        pass,
    })
}

/// Extreme generalized eigenvalues of the pencil `(A, B)` restricted to the
/// range of `B`, for symmetric PSD `A`, `B`.
///
/// Returns `(λ_lo, λ_hi)` such that `λ_lo·B ⪯ A ⪯ λ_hi·B` holds on
/// `range(B)`. When `A` carries energy outside `range(B)` (beyond
/// `rank_tol`-relative leakage), no finite upper multiple of `B` dominates
/// `A`, and `λ_hi = +∞` is returned.
///
/// # Arguments
///
/// * `a`, `b` — symmetric PSD matrices of equal size.
/// * `rank_tol` — relative eigenvalue threshold separating `range(B)` from
///   its null space (e.g. `1e-10`).
///
/// # Returns
///
/// The extreme eigenvalues of `B^{+/2} A B^{+/2}` on `range(B)`; `(0, 0)`
/// when `B = 0` and `A = 0`.
pub fn pencil_extremes(a: &DMatrix<f64>, b: &DMatrix<f64>, rank_tol: f64) -> (f64, f64) {
    assert_eq!(a.nrows(), b.nrows(), "pencil operands must agree in size");
    let n = b.nrows();
    // 1. Split the spectrum of B into range and null parts.
    let eig_b = b.clone().symmetric_eigen();
    let max_eig = eig_b.eigenvalues.iter().cloned().fold(0.0f64, f64::max);
    if max_eig <= 0.0 {
        // B = 0: A must be 0 too for any sandwich to hold.
        let leak = a.norm();
        return if leak > 0.0 { (0.0, f64::INFINITY) } else { (0.0, 0.0) };
    }
    let threshold = rank_tol * max_eig;
    let mut range_cols = Vec::new();
    let mut null_cols = Vec::new();
    for (j, &lambda) in eig_b.eigenvalues.iter().enumerate() {
        if lambda > threshold {
            range_cols.push((j, lambda));
        } else {
            null_cols.push(j);
        }
    }
    // 2. Leakage of A outside range(B): any null-direction energy means no
    //    finite upper multiple works.
    let a_scale = a.norm().max(1e-300);
    for &j in &null_cols {
        let z = eig_b.eigenvectors.column(j);
        let az = a * z;
        let quad = z.dot(&az);
        if quad > rank_tol * a_scale {
            // Lower extreme is still meaningful on range(B); compute it below
            // but report an unbounded upper extreme.
            let lo = restricted_extremes(a, &eig_b.eigenvectors, &range_cols, n).0;
            return (lo, f64::INFINITY);
        }
    }
    restricted_extremes(a, &eig_b.eigenvectors, &range_cols, n)
}

/// Extremes of `W^T A W` for `W` = range eigenvectors scaled by `λ^{-1/2}`.
fn restricted_extremes(
    a: &DMatrix<f64>,
    vectors: &DMatrix<f64>,
    range_cols: &[(usize, f64)],
    n: usize,
) -> (f64, f64) {
    let r = range_cols.len();
    if r == 0 {
        return (0.0, 0.0);
    }
    let mut w = DMatrix::zeros(n, r);
    for (k, &(j, lambda)) in range_cols.iter().enumerate() {
        let scale = lambda.sqrt().recip();
        for i in 0..n {
            w[(i, k)] = vectors[(i, j)] * scale;
        }
    }
    let m = w.transpose() * a * &w;
    let eig = m.symmetric_eigen();
    let hi = eig.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    (lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pinv_sqrt_inverts_on_range_and_kills_null() {
        // Path Laplacian on 3 vertices: null direction 1.
        let l = DMatrix::from_row_slice(
            3,
            3,
            &[1.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 1.0],
        );
        let p = pinv_sqrt(&l, 1e-10);
        let ones = DVector::from_element(3, 1.0);
        assert!((&p * &ones).norm() < 1e-10);
        // P L P should be the projector off the null space: Π = I − 11^T/3.
        let plp = &p * &l * &p;
        let pi = DMatrix::identity(3, 3) - &ones * ones.transpose() / 3.0;
        assert!((plp - pi).norm() < 1e-10);
    }

    #[test]
    fn pencil_identity_pair() {
        let i3 = DMatrix::identity(3, 3);
        let (lo, hi) = pencil_extremes(&(2.0 * &i3), &i3, 1e-10);
        assert!((lo - 2.0).abs() < 1e-12 && (hi - 2.0).abs() < 1e-12);
    }

    #[test]
    fn pencil_detects_leakage() {
        // B has null space e_3; A puts weight there → unbounded above.
        let mut b = DMatrix::identity(3, 3);
        b[(2, 2)] = 0.0;
        let a = DMatrix::identity(3, 3);
        let (lo, hi) = pencil_extremes(&a, &b, 1e-10);
        assert_eq!(hi, f64::INFINITY);
        assert!((lo - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pencil_respects_shared_null_space() {
        // Both vanish on 1: path Laplacian vs complete-graph Laplacian, n=3.
        let path = DMatrix::from_row_slice(3, 3, &[1.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 1.0]);
        let complete =
            DMatrix::from_row_slice(3, 3, &[2.0, -1.0, -1.0, -1.0, 2.0, -1.0, -1.0, -1.0, 2.0]);
        let (lo, hi) = pencil_extremes(&path, &complete, 1e-10);
        // Pencil eigenvalues of (path, complete) on 1^⊥ are {1/3, 1}.
        assert!((lo - 1.0 / 3.0).abs() < 1e-9, "lo = {lo}");
        assert!((hi - 1.0).abs() < 1e-9, "hi = {hi}");
    }

    #[test]
    fn inv_sqrt_of_diagonal() {
        // diag(4, 9)^{-1/2} = diag(1/2, 1/3).
        let m = DMatrix::from_row_slice(2, 2, &[4.0, 0.0, 0.0, 9.0]);
        let r = inv_sqrt(&m, &Tolerances::default()).unwrap();
        assert!((r[(0, 0)] - 0.5).abs() < 1e-12);
        assert!((r[(1, 1)] - 1.0 / 3.0).abs() < 1e-12);
        assert!(r[(0, 1)].abs() < 1e-12);
    }

    #[test]
    fn inv_sqrt_rejects_singular() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(matches!(
            inv_sqrt(&m, &Tolerances::default()),
            Err(LinalgError::IllConditioned { .. })
        ));
    }

    #[test]
    fn leverage_rejects_rank_deficient() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 2.0, 4.0, 3.0, 6.0]);
        assert!(matches!(
            leverage_scores(&a, &Tolerances::default()),
            Err(LinalgError::RankDeficient { .. })
        ));
    }
}
