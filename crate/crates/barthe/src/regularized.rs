//! The regularized objective `F(t) = f(t) + λ·t^T Π t`.
//!
//! `Π = I − 11^T/n` is the centering projector, so the regularizer penalizes
//! only the component of `t` orthogonal to the all-ones direction — the
//! direction the objective itself is invariant along. With
//! `λ = ε²·c_min²/(4·log²κ)` the regularizer's contribution at any point of
//! the `‖t‖_∞ ≤ log κ` box stays below the termination threshold's slack, so
//! optimizing `F` to half the threshold certifies the original objective.

use linalg_core::Dataset;
use nalgebra::DVector;

use crate::objective::{gradient, objective, BartheError};
use crate::state::ScalingState;

/// Centering projector application: `Πt = t − mean(t)·1`.
fn center(t: &DVector<f64>) -> DVector<f64> {
    let mean = t.mean();
    t.map(|x| x - mean)
}

/// The regularized objective with a fixed strength `λ`.
#[derive(Debug, Clone, Copy)]
pub struct RegularizedObjective {
    lambda: f64,
}

impl RegularizedObjective {
    /// Builds the regularizer from the driver parameters:
    /// `λ = ε²·c_min²/(4·log²κ)`.
    pub fn from_driver(epsilon: f64, c_min: f64, log_kappa: f64) -> Self {
        assert!(log_kappa > 0.0, "log κ must be positive");
        let lambda = epsilon * epsilon * c_min * c_min / (4.0 * log_kappa * log_kappa);
        Self { lambda }
    }

    /// A regularizer with explicit strength (λ = 0 reduces `F` to `f`).
    pub fn with_lambda(lambda: f64) -> Self {
        assert!(lambda >= 0.0, "λ must be nonnegative");
        Self { lambda }
    }

    /// The strength λ.
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Value `F(t) = f(t) + λ‖Πt‖²`.
    ///
    /// # Errors
    ///
    /// Propagates [`BartheError::GramNotPositive`].
    pub fn value(&self, ds: &Dataset, t: &DVector<f64>) -> Result<f64, BartheError> {
        let centered = center(t);
        Ok(objective(ds, t)? + self.lambda * centered.norm_squared())
    }

    /// Gradient `∇F(t) = ∇f(t) + 2λ·Πt` at a prepared state.
    pub fn gradient(&self, ds: &Dataset, state: &ScalingState) -> DVector<f64> {
        let mut g = gradient(ds, state);
        if self.lambda > 0.0 {
            g += center(state.t()) * (2.0 * self.lambda);
        }
        g
    }

    /// Hessian–vector action `∇²F(t)·v = ∇²f(t)·v + 2λ·Πv`.
    pub fn hessian_matvec(&self, state: &ScalingState, v: &DVector<f64>) -> DVector<f64> {
        let mut hv = crate::objective::hessian_matvec(state, v);
        if self.lambda > 0.0 {
            hv += center(v) * (2.0 * self.lambda);
        }
        hv
    }

    /// Adds the regularizer's diagonal-plus-rank-one term to a dense Hessian
    /// in place: `H ← H + 2λ·Π`.
    pub fn add_to_dense(&self, h: &mut nalgebra::DMatrix<f64>) {
        if self.lambda == 0.0 {
            return;
        }
        let n = h.nrows();
        let two_lambda = 2.0 * self.lambda;
        let off = two_lambda / n as f64;
        for i in 0..n {
            for j in 0..n {
                h[(i, j)] -= off;
            }
            h[(i, i)] += two_lambda;
        }
    }
}
