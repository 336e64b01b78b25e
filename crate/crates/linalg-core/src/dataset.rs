//! Validated datasets: row matrices paired with marginals.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::config::MARGINAL_SUM_TOL;

/// Errors raised while validating a dataset.
#[derive(Debug, Error)]
pub enum DatasetError {
    /// The matrix must be tall: `n ≥ d ≥ 1`.
    #[error("matrix must satisfy n >= d >= 1, got n = {n}, d = {d}")]
    BadShape { n: usize, d: usize },
    /// Every entry must be a finite float.
    #[error("non-finite entry at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    /// Rows are normalized onto the sphere downstream, so zero rows are
    /// rejected up front.
    #[error("row {row} has zero Euclidean norm")]
    ZeroRow { row: usize },
    /// Marginals live in `(0, 1]`.
    #[error("marginal c[{index}] = {value} outside (0, 1]")]
    MarginalOutOfRange { index: usize, value: f64 },
    /// Marginals must sum to the ambient dimension.
    #[error("marginals sum to {sum}, expected d = {expected} (tolerance {tol})")]
    MarginalSum { sum: f64, expected: f64, tol: f64 },
    /// `c` must have one entry per row of `A`.
    #[error("marginal length {got} does not match row count {expected}")]
    MarginalLength { got: usize, expected: usize },
}

/// A full set of row vectors `a_1, …, a_n ∈ R^d` with marginals `c`.
///
/// Invariants established at construction:
/// * `n ≥ d ≥ 1`,
/// * every entry finite, every row with positive norm,
/// * `c_i ∈ (0, 1]` and `Σ_i c_i = d` within [`MARGINAL_SUM_TOL`].
#[derive(Debug, Clone)]
pub struct Dataset {
    a: DMatrix<f64>,
    c: DVector<f64>,
}

impl Dataset {
    /// Builds a dataset, validating all invariants.
    ///
    /// # Errors
    ///
    /// Returns a [`DatasetError`] describing the first violated invariant.
    pub fn new(a: DMatrix<f64>, c: DVector<f64>) -> Result<Self, DatasetError> {
        let (n, d) = (a.nrows(), a.ncols());
        if d < 1 || n < d {
            return Err(DatasetError::BadShape { n, d });
        }
        if c.len() != n {
            return Err(DatasetError::MarginalLength {
                got: c.len(),
                expected: n,
            });
        }
        for row in 0..n {
            let mut norm_sq = 0.0;
            for col in 0..d {
                let x = a[(row, col)];
                if !x.is_finite() {
                    return Err(DatasetError::NonFinite { row, col });
                }
                norm_sq += x * x;
            }
            if norm_sq <= 0.0 {
                return Err(DatasetError::ZeroRow { row });
            }
        }
        for (index, &value) in c.iter().enumerate() {
            if !value.is_finite() || value <= 0.0 || value > 1.0 {
                return Err(DatasetError::MarginalOutOfRange { index, value });
            }
        }
        let sum: f64 = c.iter().sum();
        if (sum - d as f64).abs() > MARGINAL_SUM_TOL {
            return Err(DatasetError::MarginalSum {
                sum,
                expected: d as f64,
                tol: MARGINAL_SUM_TOL,
            });
        }
        Ok(Self { a, c })
    }

    /// Builds a dataset with the uniform marginals `c = (d/n)·1`.
    ///
    /// # Errors
    ///
    /// Same as [`Dataset::new`]; the uniform marginals themselves always
    /// satisfy the marginal invariants when `n ≥ d`.
    pub fn with_uniform_marginals(a: DMatrix<f64>) -> Result<Self, DatasetError> {
        let (n, d) = (a.nrows(), a.ncols());
        if d < 1 || n < d {
            return Err(DatasetError::BadShape { n, d });
        }
        let c = DVector::from_element(n, d as f64 / n as f64);
        Self::new(a, c)
    }

    /// Number of rows `n`.
    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    /// Ambient dimension `d`.
    pub fn d(&self) -> usize {
        self.a.ncols()
    }

    /// The row matrix `A`.
    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    /// The marginals `c`.
    pub fn c(&self) -> &DVector<f64> {
        &self.c
    }

    /// Smallest marginal, used by termination thresholds.
    pub fn c_min(&self) -> f64 {
        self.c.iter().cloned().fold(f64::INFINITY, f64::min)
    }
}
