//! Implicit spectral sparsification of a hidden graph Laplacian.
//!
//! The input is a Laplacian `L` available only through matrix-vector
//! products. A matrix multiplicative-weights outer loop maintains a Gibbs
//! state over the preconditioned space, estimates its gradient geometry
//! through randomized embeddings, approximates the gradient by a small
//! family of cross-piece clique indicators, and feeds each indicator to the
//! width-independent packing optimizer. Averaging the oracle answers yields
//! an explicitly represented reweighting `x̄` whose Laplacian spectrally
//! sandwiches the regularized target `L + ΔΠ`; a homotopy over shrinking
//! regularizations removes the dependence on a good starting
//! preconditioner, and inverse-square-root access carries one phase's
//! output into the next.
//!
//! Two execution paths are kept throughout: a dense reference path (exact
//! traces, exact embeddings, exact inverse square roots) for validation
//! and modest sizes, and a sketched path (Chebyshev polynomial filters,
//! Hutchinson traces, Gaussian sketches, preconditioned Krylov solves)
//! that only touches the hidden operator through counted matvec queries.

use thiserror::Error;

use gridhash::{GridConfig, GridError};
use packing::{AccessMode, PackingConfig, PackingError};
use soc::{SocError, SparsifyConfig};

mod chebyshev;
mod embed;
mod estimate;
mod homotopy;
mod invsqrt;
mod oracle;
mod state;

pub use chebyshev::{half_exp_approx, tight_exp_approx, ChebApprox};
pub use embed::{mmw_embed, MmwEmbed};
pub use estimate::{trace_exp_estimate, trace_pyp_estimate, TraceEstimate};
pub use homotopy::{
    sparsify_implicit, ImplicitLaplacianOracle, PhaseReport, ShiftedOperator, SparsifyOutcome,
    SparsifyReport,
};
pub use invsqrt::{
    inv_sqrt_access, sparsify_term_sum, InvSqrtAccess, InvSqrtOperator, InvSqrtReport,
};
pub use oracle::{oracle_mdr, truncation_guard, MdrBounds, MdrOutcome, RoundRecord};
pub use state::{MmwState, PhaseP, TermSum};

/// Failures surfaced by the sparsification layers.
#[derive(Debug, Error)]
pub enum SparsifierError {
    /// Inputs outside the documented domain.
    #[error("bad parameter: {what}")]
    BadParameter {
        /// Human-readable description of the violated requirement.
        what: String,
    },

    /// An adaptive trace estimate did not reach its relative-error target
    /// within the probe budget.
    #[error(
        "trace estimate stalled at relative 3SE {rel_3se:.3e} after {probes} probes \
         (target {target:.3e})"
    )]
    NormEstimateFailed {
        /// Relative three-standard-error width at the probe cap.
        rel_3se: f64,
        /// Probes spent.
        probes: usize,
        /// Requested relative width.
        target: f64,
    },

    /// A polynomial or rational approximation could not meet its accuracy
    /// target within the degree cap.
    #[error("approximation degree {needed} exceeds cap {cap} (target {target:.3e})")]
    PolynomialDegreeExceeded {
        /// Degree the accuracy target would require (last attempted).
        needed: usize,
        /// Configured cap.
        cap: usize,
        /// Accuracy target that was not met.
        target: f64,
    },

    /// An inner conjugate-gradient solve stopped making progress before
    /// reaching its residual target.
    #[error("Krylov solve stagnated at residual {residual:.3e} after {iterations} iterations")]
    KrylovStagnation {
        /// Best relative residual achieved.
        residual: f64,
        /// Iterations spent.
        iterations: usize,
    },

    /// A homotopy phase failed; the source error is preserved.
    #[error("phase {phase} failed: {source}")]
    PhaseFailure {
        /// 1-based phase index.
        phase: usize,
        /// Underlying failure.
        source: Box<SparsifierError>,
    },

    /// Partition/clique layer failure.
    #[error(transparent)]
    Soc(#[from] SocError),

    /// Grid rounding layer failure.
    #[error(transparent)]
    Grid(#[from] GridError),

    /// Inner packing-oracle failure.
    #[error(transparent)]
    Packing(#[from] PackingError),
}

/// Tunables for the sparsification pipeline.
///
/// Defaults are analysis-grade: they favor the guarantees over speed.
/// Batch drivers and the end-to-end tests override the expensive knobs
/// (round caps, sketch sizes, ladder resolution) and rely on the measured
/// quality factors that every stage reports.
#[derive(Debug, Clone)]
pub struct SparsifierConfig {
    /// Dense-reference vs sketched execution for traces, embeddings and
    /// inverse square roots.
    pub mode: AccessMode,
    /// Largest `n` for which dense twins are materialized.
    pub dense_cap: usize,
    /// Relative one-sided margin for the half-exponential filter: the
    /// shifted polynomial `M` obeys `e^{-x/2} ≤ M(x) ≤ (1+margin)·e^{-x/2}`
    /// on the fit window.
    pub cheb_margin: f64,
    /// Hard cap on Chebyshev degrees.
    pub cheb_degree_cap: usize,
    /// Leading constant in the sketch row count `k = ⌈C·ln(n/δ)⌉`.
    pub jl_constant: f64,
    /// Force exact embeddings (`Some(true)`), force sketches
    /// (`Some(false)`), or follow `mode` (`None`).
    pub embed_exact: Option<bool>,
    /// Hutchinson probe batch size.
    pub probe_batch: usize,
    /// Hutchinson probe cap before `NormEstimateFailed`.
    pub probe_cap: usize,
    /// Relative three-standard-error target for plain trace estimates.
    pub trace_rel_target: f64,
    /// Relative three-standard-error target for each side of the
    /// projected-trace ratio estimate (tighter: two one-sided shifts
    /// compound).
    pub ratio_rel_target: f64,
    /// Leading constant in the round-count rule `T = ⌈c·m·Q·ln n⌉`.
    pub t_constant: f64,
    /// Cap on outer rounds.
    pub t_rounds_cap: usize,
    /// Override for the truncation guard `α`; `None` uses the
    /// `(40/9)·ρ·n⁴·k²` rule.
    pub alpha_override: Option<f64>,
    /// Grid rounding tunables for the gradient approximation family.
    pub grid: GridConfig,
    /// Inner packing-oracle tunables.
    pub packing: PackingConfig,
    /// Clique sampling tunables for the output sparsifier.
    pub sparsify: SparsifyConfig,
    /// Starting quadrature node count for inverse square roots.
    pub quad_nodes: usize,
    /// Node cap before `PolynomialDegreeExceeded`.
    pub quad_node_cap: usize,
    /// Relative accuracy target for the scalar inverse-square-root
    /// quadrature on the spectral window.
    pub quad_rel_target: f64,
    /// Relative residual target for preconditioned conjugate-gradient
    /// solves.
    pub pcg_tol: f64,
    /// Iteration cap per conjugate-gradient solve.
    pub pcg_cap: usize,
    /// Power-iteration length for matrix-free spectral-norm estimates.
    pub power_iters: usize,
    /// Safety inflation applied to power-iteration estimates.
    pub power_margin: f64,
    /// Relative rank cutoff for dense pseudo-inverses and pencils.
    pub rank_tol: f64,
    /// Cap on homotopy phases.
    pub phase_cap: usize,
    /// Record dense per-round step matrices (tests only; needs the dense
    /// path and small `n`).
    pub record_dense_trace: bool,
    /// Probes used to validate a hidden oracle's symmetry and row sums.
    pub validation_probes: usize,
    /// Relative tolerance for those validation checks.
    pub validation_tol: f64,
}

impl Default for SparsifierConfig {
    fn default() -> Self {
        Self {
            mode: AccessMode::Sketched,
            dense_cap: 500,
            cheb_margin: 0.005,
            cheb_degree_cap: 600,
            jl_constant: 800.0,
            embed_exact: None,
            probe_batch: 64,
            probe_cap: 40_000,
            trace_rel_target: 0.033,
            ratio_rel_target: 0.017,
            t_constant: 256.0,
            t_rounds_cap: 2000,
            alpha_override: None,
            grid: GridConfig::default(),
            packing: PackingConfig::default(),
            sparsify: SparsifyConfig::default(),
            quad_nodes: 48,
            quad_node_cap: 384,
            quad_rel_target: 0.13,
            pcg_tol: 1e-10,
            pcg_cap: 2000,
            power_iters: 200,
            power_margin: 0.02,
            rank_tol: 1e-9,
            phase_cap: 64,
            record_dense_trace: false,
            validation_probes: 4,
            validation_tol: 1e-8,
        }
    }
}

impl SparsifierConfig {
    /// Whether embeddings should use the exact dense route.
    pub(crate) fn exact_embed(&self) -> bool {
        self.embed_exact.unwrap_or(matches!(self.mode, AccessMode::DenseReference))
    }
}

/// Dense-reference configuration: exact traces, embeddings and inverse
/// square roots wherever a dense twin fits.
pub fn reference_config() -> SparsifierConfig {
    SparsifierConfig {
        mode: AccessMode::DenseReference,
        packing: packing::reference_config(),
        ..SparsifierConfig::default()
    }
}
