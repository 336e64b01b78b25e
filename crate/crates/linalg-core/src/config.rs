//! Numeric thresholds shared across the workspace.
//!
//! These are implementation defaults, not mathematical constants: the
//! algorithms themselves are exact in real arithmetic, and the thresholds
//! below only decide when floating-point input is treated as degenerate.
//! Every value can be overridden per call site.

/// Conditioning and degeneracy thresholds for the dense kernels.
#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    /// Relative pivot threshold for rank detection in the column-pivoted QR
    /// used by leverage scores. A diagonal entry of `R` below
    /// `pivot_rel · |r_11|` marks the matrix as rank deficient.
    pub pivot_rel: f64,
    /// Minimum allowed ratio `λ_min / λ_max` for a matrix passed to the
    /// inverse square root; below this the inversion is refused rather than
    /// amplified into noise.
    pub eig_ratio: f64,
    /// Row norms below this are treated as zero when certifying isotropy
    /// (a zero row can never be normalized onto the sphere).
    pub degenerate_row: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            // Roughly 1e4 ulps at unit scale: safely above accumulated
            // rounding in factorizations of well-posed inputs, far below any
            // genuine spectral gap we care about.
            pivot_rel: 1e-12,
            eig_ratio: 1e-14,
            degenerate_row: 1e-14,
        }
    }
}

/// Absolute tolerance for validating that marginals sum to `d`.
pub const MARGINAL_SUM_TOL: f64 = 1e-9;

/// Slack allowed above `1.0` for a computed leverage score before it is
/// considered invalid (leverage scores are ≤ 1 in exact arithmetic).
pub const LEVERAGE_UPPER_SLACK: f64 = 1e-9;
