//! Gradient embeddings: squared point distances representing
//! `𝒜*(Y^{p−1})` for `Y = 𝒜(w)/‖𝒜(w)‖_p`.
//!
//! Writing `M = 𝒜(w) = P𝓛(w)P`, the gradient entry at an edge `e = (u, v)`
//! is `⟨A_e, Y^{p−1}⟩ = ‖Y^{(p−1)/2} P (e_u − e_v)‖²` — a squared distance
//! between columns of `Y^{(p−1)/2} P`. The sketched path compresses those
//! columns with a Gaussian matrix `G` (rows scaled `1/√k`) and calibrates by
//! a Hutchinson estimate `Z` of `Tr(M^p) = ‖M‖_p^p`:
//!
//! ```text
//!   Q = (1.1)^{-1/2} · Z^{1/(2p) − 1/2} · G · M^{(p−1)/2} · P ,
//! ```
//!
//! so that with probability `1 − δ` the squared distances `f'` of `Q`'s
//! columns satisfy `½·𝒜*(Y^{p−1}) ≤ f' ≤ 𝒜*(Y^{p−1})` entrywise: the
//! deliberate `1.1` deflation absorbs both the one-sided norm estimate
//! (`Z ≤ Tr(M^p) ≤ 1.1·Z`) and the sketch's distortion. The reference path
//! computes the same distances exactly from a dense eigendecomposition.

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};

use gridhash::PointCloud;
use linalg_core::SplitSeed;

use crate::instance::PackingInstance;
use crate::{PackingConfig, PackingError};

/// An embedded gradient: one point per vertex, plus the Schatten norm.
#[derive(Debug, Clone)]
pub struct EmbedOutcome {
    /// Embedded points; squared distances approximate (or equal) the
    /// gradient entries.
    pub cloud: PointCloud,
    /// `‖𝒜(w)‖_p` — exact in reference mode, the calibrated estimate
    /// `Z^{1/p}` in sketched mode.
    pub schatten_p: f64,
    /// Dense `Y^{p−1}` for dual accumulation; reference mode only.
    pub y_pow: Option<DMatrix<f64>>,
    /// Hutchinson probes consumed (sketched mode).
    pub probes: usize,
}

/// A cloud of `n` coincident points: the embedding of a vanished operator
/// (every gradient entry is zero).
fn zero_cloud(n: usize) -> PointCloud {
    PointCloud::new(DMatrix::zeros(n, 1)).expect("zero matrix is finite")
}

/// Reference-mode embedding: exact distances from a dense eigendecomposition
/// of `𝒜(w)`.
///
/// # Errors
///
/// [`PackingError::BadParameter`] when `P` has no dense twin or `p` is not
/// odd ≥ 3; [`PackingError::Soc`] past the dense cap.
pub fn exact_embed(
    instance: &PackingInstance,
    w: &soc::MaskedSoc,
    p: usize,
    cap: usize,
) -> Result<EmbedOutcome, PackingError> {
    check_p(p)?;
    let n = instance.n();
    let m = instance.a_dense(w, cap)?.ok_or_else(|| PackingError::BadParameter {
        what: "reference-mode embedding needs an operator with a dense twin".into(),
    })?;
    let p_dense = instance.p_op().as_dense().expect("dense twin just produced");
    let eig = m.symmetric_eigen();
    // Clamp the tiny negative eigenvalues a PSD matrix picks up in floating
    // point; they would otherwise poison odd powers.
    let lambda: Vec<f64> = eig.eigenvalues.iter().map(|x| x.max(0.0)).collect();
    let norm_pp: f64 = lambda.iter().map(|x| x.powi(p as i32)).sum();
    if norm_pp <= f64::MIN_POSITIVE {
        return Ok(EmbedOutcome {
            cloud: zero_cloud(n),
            schatten_p: 0.0,
            y_pow: Some(DMatrix::zeros(n, n)),
            probes: 0,
        });
    }
    let norm_p = norm_pp.powf(1.0 / p as f64);
    // B = Y^{(p−1)/2} and Y^{p−1}, sharing the eigenvectors of M.
    let half_exp = (p as f64 - 1.0) / 2.0;
    let mut b_cols = eig.eigenvectors.clone();
    let mut y_cols = eig.eigenvectors.clone();
    for (j, l) in lambda.iter().enumerate() {
        let ratio = l / norm_p;
        // Column scalings λ̂^{(p−1)/4} and λ̂^{(p−1)/2} so that C·Cᵀ gives
        // the target powers symmetrically.
        let wb = ratio.powf(half_exp / 2.0);
        let wy = ratio.powf(half_exp);
        for i in 0..b_cols.nrows() {
            b_cols[(i, j)] *= wb;
            y_cols[(i, j)] *= wy;
        }
    }
    let b = &b_cols * b_cols.transpose();
    let y_pow = &y_cols * y_cols.transpose();
    // Points are the columns of B·P, i.e. the rows of P·B.
    let points = p_dense * b;
    Ok(EmbedOutcome {
        cloud: PointCloud::new(points)?,
        schatten_p: norm_p,
        y_pow: Some(y_pow),
        probes: 0,
    })
}

/// Sketched embedding: Hutchinson-calibrated Gaussian sketch touching the
/// operator only through matvecs.
///
/// # Errors
///
/// [`PackingError::NormEstimateFailed`] when the trace-power estimator's
/// variance check trips within the probe budget.
pub fn schatten_embed(
    instance: &PackingInstance,
    w: &soc::MaskedSoc,
    p: usize,
    delta: f64,
    seed: SplitSeed,
    config: &PackingConfig,
) -> Result<EmbedOutcome, PackingError> {
    check_p(p)?;
    if !(delta > 0.0 && delta < 1.0) {
        return Err(PackingError::BadParameter {
            what: format!("delta must lie in (0,1), got {delta}"),
        });
    }
    let n = instance.n();
    let half = (p - 1) / 2;

    // --- Hutchinson estimate of Tr(M^p) -------------------------------
    // Each probe evaluates z^T M^p z = h^T (M h) with h = M^{(p−1)/2} z ≥ 0.
    // Batches accumulate until three standard errors fall inside the
    // relative target; the calibration Z = mean/(1+target) then gives the
    // one-sided sandwich Z ≤ Tr(M^p) ≤ 1.1·Z.
    let mut probe_rng = seed.child(0).rng();
    let target = config.probe_rel_target;
    let (mut sum, mut sumsq, mut count) = (0.0_f64, 0.0_f64, 0usize);
    let mut any_nonzero = false;
    let z_est = loop {
        for _ in 0..config.probe_batch {
            let z = DVector::from_fn(n, |_, _| {
                <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut probe_rng)
            });
            let mut h = z;
            for _ in 0..half {
                h = instance.a_apply(w, &h);
            }
            let val = h.dot(&instance.a_apply(w, &h));
            any_nonzero |= val != 0.0;
            sum += val;
            sumsq += val * val;
            count += 1;
        }
        let mean = sum / count as f64;
        if !any_nonzero {
            // Vanished operator: every gradient entry is zero.
            return Ok(EmbedOutcome {
                cloud: zero_cloud(n),
                schatten_p: 0.0,
                y_pow: None,
                probes: count,
            });
        }
        let var = ((sumsq - sum * sum / count as f64) / (count as f64 - 1.0)).max(0.0);
        let se3 = 3.0 * (var / count as f64).sqrt();
        if mean > 0.0 && se3 <= target * mean {
            break mean / (1.0 + target);
        }
        if count >= config.probe_cap {
            return Err(PackingError::NormEstimateFailed {
                rel_se: if mean > 0.0 { se3 / mean } else { f64::INFINITY },
                probes: count,
                target,
            });
        }
    };

    // --- Gaussian sketch of M^{(p−1)/2} applied to P -------------------
    let k = jl_rows(n, delta, config);
    let mut g_rng = seed.child(1).rng();
    let scale = (1.1_f64).sqrt().recip() * z_est.powf((1.0 - p as f64) / (2.0 * p as f64));
    let row_scale = (k as f64).sqrt().recip();
    let mut points = DMatrix::zeros(n, k);
    for r in 0..k {
        let g = DVector::from_fn(n, |_, _| {
            row_scale
                * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut g_rng)
        });
        let mut h = g;
        for _ in 0..half {
            h = instance.a_apply(w, &h);
        }
        let col = instance.p_op().apply(&h) * scale;
        points.set_column(r, &col);
    }
    Ok(EmbedOutcome {
        cloud: PointCloud::new(points)?,
        schatten_p: z_est.powf(1.0 / p as f64),
        y_pow: None,
        probes: count,
    })
}

/// Sketch row count `k = ⌈C_jl·ln(n/δ)⌉`.
pub fn jl_rows(n: usize, delta: f64, config: &PackingConfig) -> usize {
    ((config.jl_constant * ((n.max(2) as f64) / delta).ln()).ceil() as usize).max(1)
}

fn check_p(p: usize) -> Result<(), PackingError> {
    if p < 3 || p % 2 == 0 {
        return Err(PackingError::BadParameter {
            what: format!("Schatten exponent must be odd and at least 3, got {p}"),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use soc::{Partition, SocRep};

    use crate::instance::SupportMask;

    fn unit_edge_instance(p_dense: &DMatrix<f64>) -> PackingInstance<'_> {
        let mask = SupportMask::Soc(Partition::full(2));
        PackingInstance::new(p_dense, mask, 1.0, 1.0).unwrap()
    }

    #[test]
    fn exact_embed_recovers_unit_edge_gradient() {
        // M = L_e has eigenvalues {2, 0}; ‖M‖_3 = 2, Y² = L_e/2, and the
        // gradient at the edge is χ^T Y² χ = 2.
        let p_dense = DMatrix::identity(2, 2);
        let inst = unit_edge_instance(&p_dense);
        let w = inst.support().initial_iterate();
        let out = exact_embed(&inst, &w, 3, 100).unwrap();
        assert!((out.schatten_p - 2.0).abs() < 1e-12);
        assert!((out.cloud.squared_distance(0, 1) - 2.0).abs() < 1e-12);
        let y = out.y_pow.unwrap();
        assert!((y[(0, 0)] - 0.5).abs() < 1e-12 && (y[(0, 1)] + 0.5).abs() < 1e-12);
    }

    #[test]
    fn vanished_operator_embeds_to_coincident_points() {
        // Empty support: 𝓛(w) = 0.
        let p_dense = DMatrix::identity(3, 3);
        let mask = SupportMask::Soc(Partition::new(3, vec![vec![0]]).unwrap());
        let inst = PackingInstance::new(&p_dense, mask, 1.0, 1.0).unwrap();
        let w = inst.support().initial_iterate();
        let exact = exact_embed(&inst, &w, 3, 100).unwrap();
        assert_eq!(exact.schatten_p, 0.0);
        assert_eq!(exact.cloud.squared_distance(0, 2), 0.0);
        let sketched = schatten_embed(
            &inst,
            &w,
            3,
            0.1,
            SplitSeed::new(5),
            &PackingConfig::default(),
        )
        .unwrap();
        assert_eq!(sketched.schatten_p, 0.0);
        assert_eq!(sketched.cloud.squared_distance(1, 2), 0.0);
    }

    #[test]
    fn probe_cap_trips_norm_estimate() {
        let p_dense = DMatrix::identity(2, 2);
        let inst = unit_edge_instance(&p_dense);
        let w = inst.support().initial_iterate();
        let config = PackingConfig { probe_batch: 4, probe_cap: 8, ..PackingConfig::default() };
        let err = schatten_embed(&inst, &w, 3, 0.1, SplitSeed::new(1), &config).unwrap_err();
        assert!(matches!(err, PackingError::NormEstimateFailed { probes: 8, .. }));
    }

    #[test]
    fn duplicate_points_have_zero_distance() {
        // Vertices 0 and 1 are isolated (the only edge is (2,3)), so both
        // embed at the origin: duplicate points, distance exactly zero.
        let p_dense = DMatrix::identity(4, 4);
        let soc_rep = SocRep::new(
            4,
            vec![(1.0, Partition::new(4, vec![vec![2, 3]]).unwrap())],
        )
        .unwrap();
        let w = soc::MaskedSoc::new(soc_rep, None).unwrap();
        let mask = SupportMask::Soc(Partition::full(4));
        let inst = PackingInstance::new(&p_dense, mask, 1.0, 1.0).unwrap();
        let out = exact_embed(&inst, &w, 3, 100).unwrap();
        assert_eq!(out.cloud.squared_distance(0, 1), 0.0);
        // And the live pair's distance equals the dense gradient entry.
        let y = out.y_pow.unwrap();
        let want = inst.a_star_entry(&y, 2, 3);
        assert!((out.cloud.squared_distance(2, 3) - want).abs() < 1e-12);
    }
}
