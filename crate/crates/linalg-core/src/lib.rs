//! Shared dense linear algebra for radial-isotropic-position solvers.
//!
//! A dataset is a full-rank matrix `A ∈ R^{n×d}` of row vectors `a_i` together
//! with marginals `c ∈ (0,1]^n`, `Σ_i c_i = d`. A matrix `R` puts the dataset
//! in *(c, ε)-radial isotropic position* when
//!
//! ```text
//!   exp(-ε)·I_d  ⪯  Σ_i c_i (R a_i)(R a_i)^T / ‖R a_i‖²  ⪯  exp(ε)·I_d .
//! ```
//!
//! This crate provides the primitives every other crate builds on:
//!
//! * [`Dataset`] — validated `(A, c)` pairs,
//! * [`leverage_scores`] — `τ_i = a_i^T (A^T A)^{-1} a_i` via pivoted QR,
//! * [`scaled_gram`] — `Z(t) = Σ_i exp(t_i) a_i a_i^T`,
//! * [`inv_sqrt`] — symmetric `M^{-1/2}` with a conditioning guard,
//! * [`verify_rip`] — the end-to-end certificate above,
//! * [`SplitSeed`] — a splittable counter-based RNG for reproducible
//!   randomized algorithms downstream,
//! * plain-text matrix/vector serialization shared by the CLI.

pub mod config;
pub mod dataset;
pub mod io;
pub mod operator;
pub mod ops;
pub mod rng;

pub use config::Tolerances;
pub use dataset::{Dataset, DatasetError};
pub use io::{read_marginals, read_matrix, read_vector, write_matrix, write_vector, IoError};
pub use operator::{
    power_lambda_max, CountingOperator, FnOperator, LinearOperator, ScaledOperator,
};
pub use ops::{
    inv_sqrt, leverage_scores, pencil_extremes, pinv_sqrt, scaled_gram, verify_rip, LinalgError,
    SpectralCertificate,
};
pub use rng::SplitSeed;
