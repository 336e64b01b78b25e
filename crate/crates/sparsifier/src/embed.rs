//! Geometry extraction from the Gibbs state.
//!
//! The gradient entry for a pair `(u, v)` is the squared embedding
//! distance `⟨PYP, L_{uv}⟩ = ‖b_u − b_v‖²` where `B = (PYP)^{1/2}`. The
//! rounding family only needs those distances, so the state is turned into
//! a point cloud: exactly (a dense square root, one point per column) in
//! reference mode, or through a Gaussian sketch of the filtered columns
//! `√(3/(4Z))·G·M·P` in sketched mode, where `M` is the one-sided
//! half-exponential filter and `Z` the calibrated partition-function
//! underestimate.
//!
//! The sketch is sized and calibrated so that, with probability `1 − δ`,
//! every squared distance `f` of the cloud satisfies `g/2 ≤ f ≤ g` against
//! the true gradient `g`: the `3/4` prefactor centers the window, the
//! one-sided `Z` and filter shifts push only upward, and the row count
//! absorbs the Johnson–Lindenstrauss fluctuation.

use gridhash::PointCloud;
use linalg_core::{LinearOperator, SplitSeed};
use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};

use crate::chebyshev::half_exp_approx;
use crate::estimate::trace_exp_estimate;
use crate::state::MmwState;
use crate::{SparsifierConfig, SparsifierError};

/// An embedding of the current state.
#[derive(Debug, Clone)]
pub struct MmwEmbed {
    /// One point per vertex; squared distances approximate the gradient.
    pub cloud: PointCloud,
    /// Partition-function value used for calibration.
    pub z: f64,
    /// Embedding dimension.
    pub k: usize,
    /// Whether the dense-exact route was taken.
    pub exact: bool,
}

/// Embeds the state into a point cloud whose squared distances land in
/// `[g/2, g]` against the true gradient entries `g` (exactly `g` on the
/// dense route).
///
/// # Errors
///
/// [`SparsifierError::BadParameter`] when the exact route is requested
/// without a dense twin, plus the estimator and filter failures of the
/// sketched route.
pub fn mmw_embed(
    state: &MmwState,
    r: f64,
    delta: f64,
    seed: SplitSeed,
    config: &SparsifierConfig,
) -> Result<MmwEmbed, SparsifierError> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(SparsifierError::BadParameter { what: format!("delta = {delta} not in (0,1)") });
    }
    let n = state.n();
    if config.exact_embed() {
        let (exp, trace) = state.exp_dense().ok_or_else(|| SparsifierError::BadParameter {
            what: "exact embedding requested without a dense state twin".into(),
        })?;
        let pd = state.p_dense().expect("dense twin implies a dense preconditioner");
        let a = (pd * &exp * pd) / trace;
        let eig = a.symmetric_eigen();
        let root = &eig.eigenvectors
            * DMatrix::from_diagonal(&eig.eigenvalues.map(|l| l.max(0.0).sqrt()))
            * eig.eigenvectors.transpose();
        let cloud = PointCloud::from_columns(&root)?;
        return Ok(MmwEmbed { cloud, z: trace, k: n, exact: true });
    }

    let z_est = trace_exp_estimate(state, r, delta / 2.0, seed.child(0), config)?;
    let filter = half_exp_approx(r, config.cheb_margin, config.cheb_degree_cap)?;
    let k = ((config.jl_constant * (n.max(2) as f64 / (delta / 2.0)).ln()).ceil() as usize).max(1);
    let scale = (3.0 / (4.0 * z_est.value)).sqrt();
    let smat = |v: &DVector<f64>| state.s_matvec(v);
    let p = state.p_op();
    let mut rng = seed.child(1).rng();
    let mut rows = DMatrix::zeros(k, n);
    let col_scale = (k as f64).sqrt().recip();
    for j in 0..k {
        // Row j of √(3/(4Z))·G·M·P, using symmetry: (g_jᵀ·M·P)ᵀ = P·M·g_j.
        let g = DVector::from_fn(n, |_, _| {
            col_scale * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng)
        });
        let filtered = filter.apply(&smat, &g);
        let row = p.apply(&filtered) * scale;
        rows.set_row(j, &row.transpose());
    }
    let cloud = PointCloud::from_columns(&rows)?;
    Ok(MmwEmbed { cloud, z: z_est.value, k, exact: false })
}
