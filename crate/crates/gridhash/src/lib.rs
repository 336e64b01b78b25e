//! Randomized grid and interval rounding of low-dimensional point sets into
//! partitions, and the clique-family approximations of implicit squared
//! distance vectors built on top of them.
//!
//! For points `q_1, …, q_n ∈ R^k`, the implicit vector of interest is
//! `g_e = ‖q_u − q_v‖²` over all pairs `e = (u, v)`. Materializing `g` costs
//! `Θ(n²)`; the routines here instead produce `O(polylog)` partition-shaped
//! terms whose weight sums bracket `g` entrywise:
//!
//! * [`soc_approximation`] rounds the cloud into `m` random grid partitions
//!   of box side `ρ = √(γ/k)`, each contributing weight `β` to same-box
//!   pairs. The sum `x` satisfies `0 ≤ x ≤ βm`, `x_e ≥ β` whenever
//!   `g_e ≤ 1` (with probability `1 − δ`), and `x_e = 0` whenever `g_e > γ`.
//! * [`asoc_approximation`] covers the *large* entries: a geometric ladder
//!   of interval scales per coordinate, each trial keeping a random half of
//!   the intervals ("black") and charging `βρ²` to cross-interval pairs.
//!   Each term is entrywise `≤ βg`, and the total dominates the
//!   thresholded vector `g^{(≥γ/α)}` with probability `1 − δ`.
//!
//! All randomness flows through splittable seeds: every dimension, scale,
//! and trial draws from its own child stream, so outputs are reproducible
//! given `(inputs, seed)` regardless of evaluation order.

pub mod approx;
pub mod cloud;
pub mod family;
pub mod grid;

pub use approx::{
    asoc_approximation, asoc_approximation_1d, soc_approximation, GridConfig,
};
pub use cloud::PointCloud;
pub use family::{CliqueTerm, FamilyParams, ScaledCliqueFamily};
pub use grid::{grid_partition, interval_partition_1d};

use thiserror::Error;

/// Errors raised by the rounding machinery.
#[derive(Debug, Error)]
pub enum GridError {
    /// A scalar parameter is outside its documented range.
    #[error("parameter out of range: {what}")]
    BadParameter { what: String },
    /// The scale cap `γ` must dominate every squared coordinate difference.
    #[error("gamma = {gamma:.6e} below the largest squared coordinate difference {required:.6e}")]
    GammaTooSmall { gamma: f64, required: f64 },
    /// Dense materialization refused beyond the cap.
    #[error("dense cap exceeded: n = {n} > {cap}")]
    DenseCapExceeded { n: usize, cap: usize },
}
