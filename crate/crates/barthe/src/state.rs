//! Cached per-point state for derivative evaluations.

use linalg_core::{inv_sqrt, scaled_gram, Dataset, LinalgError, Tolerances};
use nalgebra::{DMatrix, DVector};

/// Everything the derivatives of the objective need at a fixed scaling `t`:
/// the Gram matrix `Z(t)`, its inverse square root `R(t)`, the transformed
/// rows `ã_i = R(t) a_i`, and the half-scalings `s_i = exp(t_i/2)`.
///
/// The state is immutable after construction; all derivative operations are
/// pure functions of it.
#[derive(Debug, Clone)]
pub struct ScalingState {
    t: DVector<f64>,
    z: DMatrix<f64>,
    r: DMatrix<f64>,
    /// Row `i` holds `ã_i^T = (R a_i)^T`.
    rows_tilde: DMatrix<f64>,
    s: DVector<f64>,
}

impl ScalingState {
    /// Builds the cache at scaling `t`.
    ///
    /// # Errors
    ///
    /// Propagates [`LinalgError::IllConditioned`] when `Z(t)` is too close
    /// to singular for a trustworthy inverse square root.
    pub fn new(ds: &Dataset, t: &DVector<f64>, tol: &Tolerances) -> Result<Self, LinalgError> {
        assert_eq!(t.len(), ds.n(), "scaling length must equal row count");
        let z = scaled_gram(ds.a(), t);
        let r = inv_sqrt(&z, tol)?;
        let rows_tilde = ds.a() * r.transpose();
        let s = t.map(|x| (0.5 * x).exp());
        Ok(Self {
            t: t.clone(),
            z,
            r,
            rows_tilde,
            s,
        })
    }

    /// The scaling vector `t` this state was built at.
    pub fn t(&self) -> &DVector<f64> {
        &self.t
    }

    /// The Gram matrix `Z(t)`.
    pub fn z(&self) -> &DMatrix<f64> {
        &self.z
    }

    /// The transform `R(t) = Z(t)^{-1/2}`.
    pub fn r(&self) -> &DMatrix<f64> {
        &self.r
    }

    /// Matrix whose row `i` is `ã_i^T`.
    pub fn rows_tilde(&self) -> &DMatrix<f64> {
        &self.rows_tilde
    }

    /// Half-scalings `s_i = exp(t_i / 2)`.
    pub fn s(&self) -> &DVector<f64> {
        &self.s
    }

    /// `Tr(M_i) = s_i² ‖ã_i‖²` for every `i`; these are the leverage scores
    /// of the scaled rows and sum to `d`.
    pub fn trace_m(&self) -> DVector<f64> {
        let n = self.rows_tilde.nrows();
        DVector::from_fn(n, |i, _| {
            self.s[i] * self.s[i] * self.rows_tilde.row(i).norm_squared()
        })
    }

    /// Operator-norm residual of the partition-of-identity invariant
    /// `Σ_i M_i = I_d`; small for well-conditioned states. Exposed for tests.
    pub fn partition_residual(&self) -> f64 {
        let d = self.rows_tilde.ncols();
        let mut sum: DMatrix<f64> = DMatrix::zeros(d, d);
        for i in 0..self.rows_tilde.nrows() {
            let row = self.rows_tilde.row(i);
            let w = self.s[i] * self.s[i];
            for p in 0..d {
                for q in 0..d {
                    sum[(p, q)] += w * row[p] * row[q];
                }
            }
        }
        (&sum - DMatrix::identity(d, d)).norm()
    }
}
