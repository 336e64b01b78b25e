//! Barthe's objective over row scalings and its derivatives.
//!
//! For a dataset `(A, c)` the objective is
//!
//! ```text
//!   f(t) = -⟨c, t⟩ + log det Z(t),    Z(t) = A^T diag(exp t) A ,
//! ```
//!
//! a convex function whose minimizer yields the radial-isotropy transform
//! `R(t) = Z(t)^{-1/2}`. Writing `s_i = exp(t_i/2)`, `ã_i = R(t) a_i`, and
//! `M_i = s_i² ã_i ã_i^T` (so `Σ_i M_i = I_d`):
//!
//! * gradient: `∇_i f = -c_i + Tr(M_i) = -c_i + s_i²‖ã_i‖²`,
//! * Hessian: `∇²_{ij} f = Tr(M_i)·[i=j] − Tr(M_i M_j)` with
//!   `Tr(M_i M_j) = s_i² s_j² ⟨ã_i, ã_j⟩²` — a graph Laplacian,
//! * the objective is invariant to translations `t ← t + α·1`.
//!
//! The crate exposes a dense Hessian (capped), a matvec-only path with the
//! same values to high accuracy, and the regularized objective
//! `F(t) = f(t) + λ·t^T Π t` (`Π = I − 11^T/n`) used by the Newton driver.

pub mod objective;
pub mod regularized;
pub mod state;

pub use objective::{gradient, hessian_dense, hessian_matvec, objective, BartheError};
pub use regularized::RegularizedObjective;
pub use state::ScalingState;

/// Default cap on `n` for materializing the dense Hessian.
pub const DENSE_HESSIAN_CAP: usize = 5000;
