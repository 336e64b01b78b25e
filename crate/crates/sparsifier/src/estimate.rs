//! Randomized trace estimates of the Gibbs state.
//!
//! Two quantities drive each outer round: the partition function
//! `Tr exp(-S)` and the projected trace `Tr(P·Y·P)` with
//! `Y = exp(-S)/Tr exp(-S)`. Both are estimated by Hutchinson probes
//! through Chebyshev filters, with empirical three-standard-error
//! stopping, and are then deliberately shifted to one side of the truth:
//! the partition function is reported as an underestimate inside
//! `[0.9·Tr, Tr]`, and the projected trace inside `[0.9·true, true]`, so
//! window arithmetic downstream never sees the wrong side.
//!
//! In dense-reference mode both traces are computed exactly from the
//! state's dense twin; the exact value sits on the closed upper edge of
//! the same contracts.

use linalg_core::SplitSeed;
use rand::Rng;

use crate::chebyshev::tight_exp_approx;
use crate::state::MmwState;
use crate::{SparsifierConfig, SparsifierError};

/// One calibrated trace estimate.
#[derive(Debug, Clone, Copy)]
pub struct TraceEstimate {
    /// One-sided calibrated value (see the module contract).
    pub value: f64,
    /// Raw empirical mean (equals the exact value in reference mode).
    pub mean: f64,
    /// Probes spent (`0` in reference mode).
    pub probes: usize,
    /// Relative three-standard-error width at stopping.
    pub rel_3se: f64,
    /// Whether the dense-exact route was taken.
    pub exact: bool,
}

fn validate_common(state: &MmwState, r: f64, delta: f64) -> Result<(), SparsifierError> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(SparsifierError::BadParameter { what: format!("delta = {delta} not in (0,1)") });
    }
    if !(r.is_finite() && r + 1e-9 >= state.r_bound()) {
        return Err(SparsifierError::BadParameter {
            what: format!("filter window r = {r} below the state bound {}", state.r_bound()),
        });
    }
    Ok(())
}

/// Adaptive Hutchinson loop: Rademacher probes of a scalar functional,
/// stopped when the empirical three-standard-error width falls under
/// `target` relative to the mean.
fn hutchinson(
    mut value: impl FnMut(&mut rand_chacha::ChaCha8Rng) -> f64,
    rng: &mut rand_chacha::ChaCha8Rng,
    target: f64,
    batch: usize,
    cap: usize,
) -> Result<(f64, usize, f64), SparsifierError> {
    let mut sum = 0.0;
    let mut sumsq = 0.0;
    let mut count = 0usize;
    loop {
        for _ in 0..batch {
            let v = value(rng);
            sum += v;
            sumsq += v * v;
            count += 1;
        }
        let mean = sum / count as f64;
        let var = ((sumsq - sum * mean) / (count.saturating_sub(1).max(1)) as f64).max(0.0);
        let rel = if mean > 0.0 { 3.0 * (var / count as f64).sqrt() / mean } else { f64::INFINITY };
        if count >= 2 * batch && rel <= target && mean > 0.0 {
            return Ok((mean, count, rel));
        }
        if count + batch > cap {
            return Err(SparsifierError::NormEstimateFailed { rel_3se: rel, probes: count, target });
        }
    }
}

fn rademacher(n: usize, rng: &mut rand_chacha::ChaCha8Rng) -> nalgebra::DVector<f64> {
    nalgebra::DVector::from_fn(n, |_, _| if rng.random::<bool>() { 1.0 } else { -1.0 })
}

/// Estimates the partition function `Z ∈ [0.9·Tr exp(-S), Tr exp(-S)]`.
///
/// `r` must dominate the spectral bound of `S`. The probabilistic failure
/// budget `delta` is accounted to the caller; the stopping rule itself is
/// empirical (three standard errors), matching the rest of the pipeline.
///
/// # Errors
///
/// [`SparsifierError::NormEstimateFailed`] at the probe cap,
/// [`SparsifierError::PolynomialDegreeExceeded`] if the filter cannot be
/// fit, [`SparsifierError::BadParameter`] for domain violations.
pub fn trace_exp_estimate(
    state: &MmwState,
    r: f64,
    delta: f64,
    seed: SplitSeed,
    config: &SparsifierConfig,
) -> Result<TraceEstimate, SparsifierError> {
    validate_common(state, r, delta)?;
    if let Some((_, trace)) = state.exp_dense() {
        return Ok(TraceEstimate { value: trace, mean: trace, probes: 0, rel_3se: 0.0, exact: true });
    }
    let h = config.trace_rel_target;
    // Filter error budgeted to a tenth of the statistical target, measured
    // relative to the smallest eigenvalue e^{-r} of the exponential.
    let filter = tight_exp_approx(r, 0.1 * h * (-r).exp(), config.cheb_degree_cap)?;
    let n = state.n();
    let smat = |v: &nalgebra::DVector<f64>| state.s_matvec(v);
    let mut rng = seed.rng();
    let (mean, probes, rel) = hutchinson(
        |rng| {
            let z = rademacher(n, rng);
            filter.apply(&smat, &z).dot(&z)
        },
        &mut rng,
        h,
        config.probe_batch,
        config.probe_cap,
    )?;
    // One-sided calibration: divide out the statistical and filter slack so
    // the reported value cannot exceed the truth.
    let value = mean / ((1.0 + h) * (1.0 + 0.1 * h));
    Ok(TraceEstimate { value, mean, probes, rel_3se: rel, exact: false })
}

/// Estimates the projected trace `Tr(P·Y·P) ∈ [0.9·true, true]` of the
/// normalized Gibbs state `Y = exp(-S)/Tr exp(-S)`.
///
/// Numerator and denominator share each probe, and their one-sided shifts
/// compound to a window no wider than `[0.9, 1]` at the default targets.
///
/// # Errors
///
/// As [`trace_exp_estimate`].
pub fn trace_pyp_estimate(
    state: &MmwState,
    r: f64,
    delta: f64,
    seed: SplitSeed,
    config: &SparsifierConfig,
) -> Result<TraceEstimate, SparsifierError> {
    validate_common(state, r, delta)?;
    if let Some((exp, trace)) = state.exp_dense() {
        let pd = state.p_dense().expect("dense twin implies a dense preconditioner");
        let value = (pd * &exp * pd).trace() / trace;
        return Ok(TraceEstimate { value, mean: value, probes: 0, rel_3se: 0.0, exact: true });
    }
    let h = config.ratio_rel_target;
    let filter = tight_exp_approx(r, 0.1 * h * (-r).exp(), config.cheb_degree_cap)?;
    let n = state.n();
    let smat = |v: &nalgebra::DVector<f64>| state.s_matvec(v);
    let p = state.p_op();
    let mut rng = seed.rng();

    // Joint adaptive loop: one probe feeds both quadratic forms, and both
    // must reach the target width.
    let mut num = (0.0, 0.0, 0usize);
    let mut den = (0.0, 0.0, 0usize);
    let (batch, cap) = (config.probe_batch, config.probe_cap);
    let (num_mean, den_mean, probes, rel) = loop {
        for _ in 0..batch {
            let z = rademacher(n, &mut rng);
            let u = filter.apply(&smat, &z);
            let d = u.dot(&z);
            den = (den.0 + d, den.1 + d * d, den.2 + 1);
            let w = linalg_core::LinearOperator::apply(p, &z);
            let t = filter.apply(&smat, &w);
            let v = t.dot(&w);
            num = (num.0 + v, num.1 + v * v, num.2 + 1);
        }
        let stats = |(s, sq, k): (f64, f64, usize)| {
            let mean = s / k as f64;
            let var = ((sq - s * mean) / (k.saturating_sub(1).max(1)) as f64).max(0.0);
            let rel =
                if mean > 0.0 { 3.0 * (var / k as f64).sqrt() / mean } else { f64::INFINITY };
            (mean, rel)
        };
        let (nm, nr) = stats(num);
        let (dm, dr) = stats(den);
        let rel = nr.max(dr);
        if num.2 >= 2 * batch && rel <= h && nm > 0.0 && dm > 0.0 {
            break (nm, dm, num.2, rel);
        }
        if num.2 + batch > cap {
            return Err(SparsifierError::NormEstimateFailed {
                rel_3se: rel,
                probes: num.2,
                target: h,
            });
        }
    };
    // Numerator shifted down, denominator shifted up; the compounded window
    // stays inside [0.9·true, true] at the default target.
    let slack = 1.2 * h;
    let value = (num_mean / (1.0 + slack)) / (den_mean / (1.0 - slack));
    Ok(TraceEstimate { value, mean: num_mean / den_mean, probes, rel_3se: rel, exact: false })
}
