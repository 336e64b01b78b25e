//! Binary search over operator scalings: decision procedure → optimizer.
//!
//! A decision run on the scaled operator `𝒜_ν = ν𝒜` probes the value guess
//! `g = 2νn^{1/p}`: a *no-return* certifies `OPT ≤ g` (through the averaged
//! dual), while a *return* yields, after normalizing by the measured largest
//! eigenvalue, a feasible point whose value is a certified lower bound.
//! Guesses move by geometric bisection of the caller's `[ℓ, u]`, so the
//! bracket's log-ratio halves per phase — `O(log log(u/ℓ))` phases overall.
//! The reported ratio `Q_run = u_final / value` is fully measured:
//! `c^T x ≥ OPT/Q_run` holds because `u_final` upper-bounds the optimum.

use nalgebra::DVector;
use soc::MaskedSoc;

use linalg_core::{power_lambda_max, FnOperator, SplitSeed};

use crate::decision::{soc_packing_decision, DecisionOutcome, DecisionParams, PackingConfig};
use crate::instance::PackingInstance;
use crate::{AccessMode, PackingError};

/// One binary-search phase.
#[derive(Debug, Clone, Copy)]
pub struct PhaseRecord {
    /// Operator scale `ν` passed to the decision run.
    pub nu: f64,
    /// Value guess `g = 2νn^{1/p}` probed by this phase.
    pub guess: f64,
    /// Whether the decision returned.
    pub returned: bool,
    /// Value achieved by the normalized solution, when returned.
    pub achieved: Option<f64>,
}

/// Result of the optimizer.
#[derive(Debug, Clone)]
pub struct OptimizeOutcome {
    /// Feasible point `x = v ∘ c`: `λ_max(𝒜(x)) ≤ 1` up to measurement.
    pub x: MaskedSoc,
    /// `c^T x`.
    pub value: f64,
    /// Measured ratio: `value ≥ OPT/q_run`, i.e. `q_run = u_final/value`
    /// with `u_final` the tightest certified upper bound on the optimum.
    pub q_run: f64,
    /// Measured `λ_max(𝒜(x))` of the returned point.
    pub lambda_max: f64,
    /// Certified bounds after the search.
    pub bounds: (f64, f64),
    /// Parameters used by the decision runs.
    pub params: DecisionParams,
    /// Phase log.
    pub phases: Vec<PhaseRecord>,
}

/// Measured `λ_max(ν·𝒜(y))`: exact dense eigensolve when the twin exists
/// within the cap, otherwise power iteration inflated by the safety margin.
fn measured_lambda_max(
    instance: &PackingInstance,
    y: &MaskedSoc,
    nu: f64,
    seed: SplitSeed,
    config: &PackingConfig,
) -> Result<f64, PackingError> {
    if instance.n() <= config.dense_cap {
        if let Some(dense) = instance.a_dense(y, config.dense_cap)? {
            let top = dense
                .symmetric_eigen()
                .eigenvalues
                .iter()
                .cloned()
                .fold(f64::NEG_INFINITY, f64::max);
            return Ok(nu * top.max(0.0));
        }
    }
    let op = FnOperator::new(instance.n(), |v: &DVector<f64>| instance.a_apply(y, v));
    let raw = power_lambda_max(&op, config.power_iters, &mut seed.rng());
    Ok(nu * raw * (1.0 + config.power_margin))
}

/// Best value on the ray `{s·y : s ≥ 0}`: `pair_mass(y)/λ_max(𝒜(y))`.
///
/// The caller is responsible for `support(y) ⊆ support(c)`; this is the
/// scalar-scaling value used both for the initial `c`-ray candidate and by
/// brute-force reference checks.
pub fn ray_value(
    instance: &PackingInstance,
    y: &MaskedSoc,
    seed: SplitSeed,
    config: &PackingConfig,
) -> Result<f64, PackingError> {
    let lam = measured_lambda_max(instance, y, 1.0, seed, config)?;
    if lam <= f64::MIN_POSITIVE {
        return Ok(0.0);
    }
    Ok(y.pair_mass() / lam)
}

/// Approximate maximization of `c^T x` over `{x ≥ 0 : 𝒜(x) ⪯ I}` within the
/// clique representation class.
///
/// # Errors
///
/// [`PackingError::InconsistentBounds`] when decision verdicts contradict the
/// caller-certified `[ℓ, u]`; [`PackingError::BadParameter`] /
/// [`PackingError::NormEstimateFailed`] / clique errors propagated.
pub fn packing_optimize(
    instance: &PackingInstance,
    delta: f64,
    seed: SplitSeed,
    config: &PackingConfig,
) -> Result<OptimizeOutcome, PackingError> {
    let n = instance.n();
    let mask = instance.support();
    let lower = instance.lower();
    let upper = instance.upper();
    let edge_count = mask.edge_count() as f64;

    // ρ = λ_max(𝒜(c)) sizes the default run length; it also gives the
    // c-ray candidate (the best feasible multiple of the indicator itself),
    // which seeds the search and guarantees a nonempty answer.
    let w_c = mask.initial_iterate();
    let lambda_c = measured_lambda_max(instance, &w_c, 1.0, seed.child(0), config)?;
    let params = default_params_for(n, lambda_c, config);
    let np = (n.max(2) as f64).powf(1.0 / params.p as f64);
    let probe_factor = 2.0 * np;

    let mut best_x = w_c.clone();
    let mut best_val = 0.0;
    if lambda_c > f64::MIN_POSITIVE && edge_count > 0.0 {
        best_x.scale(1.0 / lambda_c);
        best_val = edge_count / lambda_c;
    } else {
        best_x.scale(0.0);
    }
    if best_val > upper * (1.0 + 1e-9) {
        return Err(PackingError::InconsistentBounds {
            evidence: format!("a feasible point achieves {best_val}"),
            lower,
            upper,
        });
    }

    let mut hi = upper;
    let lo_certified = lower.max(best_val);
    // Guess bracket: moves on probe evidence even when a return's achieved
    // value is too weak to certify progress.
    let (mut guess_lo, mut guess_hi) = (lo_certified, upper);
    // Decisions scaled so that λ_max(𝒜_ν(c)) ≥ 1: below that floor the
    // indicator itself witnesses the "return" side, so probing is pointless.
    let floor_g = if lambda_c > f64::MIN_POSITIVE {
        probe_factor / lambda_c * (1.0 + 1e-12)
    } else {
        0.0
    };

    let ratio = (hi / lo_certified).max(1.0);
    let mut budget = (ratio.log2().max(1.0).log2().ceil() as usize).clamp(1, config.phase_cap);
    if upper == lower {
        budget = 1; // OPT known exactly: a single extraction run.
    }
    let delta_call = delta / (budget as f64 + 2.0);

    let mut phases = Vec::new();
    let mut any_return = false;
    let run_phase = |nu: f64,
                         phases: &mut Vec<PhaseRecord>,
                         best_x: &mut MaskedSoc,
                         best_val: &mut f64,
                         tag: u64|
     -> Result<bool, PackingError> {
        let outcome = soc_packing_decision(
            instance,
            nu,
            params,
            delta_call,
            seed.descend(&[1, tag]),
            config,
        )?;
        let guess = nu * probe_factor;
        match outcome {
            DecisionOutcome::Returned(ret) => {
                let m = measured_lambda_max(instance, &ret.x, nu, seed.descend(&[2, tag]), config)?;
                if m <= f64::MIN_POSITIVE {
                    return Err(PackingError::InconsistentBounds {
                        evidence: "the operator vanishes on a supported direction (unbounded value)"
                            .into(),
                        lower,
                        upper,
                    });
                }
                // z = (ν/λ)·x is feasible for the unscaled problem and has
                // value ν/λ (the decision's x is mass-normalized).
                let mut z = ret.x;
                z.scale(nu / m);
                let val = nu / m;
                phases.push(PhaseRecord { nu, guess, returned: true, achieved: Some(val) });
                if val > *best_val {
                    *best_val = val;
                    *best_x = z;
                }
                if val > upper * (1.0 + 1e-9) {
                    return Err(PackingError::InconsistentBounds {
                        evidence: format!("a feasible point achieves {val}"),
                        lower,
                        upper,
                    });
                }
                Ok(true)
            }
            DecisionOutcome::NoReturn { .. } => {
                phases.push(PhaseRecord { nu, guess, returned: false, achieved: None });
                Ok(false)
            }
        }
    };

    if upper == lower {
        let nu = lower / probe_factor;
        let returned = run_phase(nu, &mut phases, &mut best_x, &mut best_val, 0)?;
        any_return |= returned;
    } else {
        for phase in 0..budget {
            if guess_hi <= guess_lo * (1.0 + 1e-9) {
                break;
            }
            let mut g = (guess_lo * guess_hi).sqrt();
            if g < floor_g {
                g = floor_g;
                if g >= guess_hi {
                    // The whole remaining bracket sits below the probe
                    // floor; the c-ray candidate already covers it within
                    // the decision's own resolution.
                    break;
                }
            }
            let nu = g / probe_factor;
            let returned = run_phase(nu, &mut phases, &mut best_x, &mut best_val, phase as u64)?;
            any_return |= returned;
            if returned {
                guess_lo = g;
            } else {
                // Dual certificate: OPT ≤ g.
                hi = hi.min(g);
                guess_hi = g;
            }
        }
    }

    if !any_return {
        // Nothing returned: probe just below the caller's floor. An honest
        // lower bound forces a return there; a no-return contradicts it.
        let g_chk = lower * 0.995;
        let nu = (g_chk / probe_factor).max(f64::MIN_POSITIVE);
        let returned = run_phase(nu, &mut phases, &mut best_x, &mut best_val, u64::MAX)?;
        if !returned {
            return Err(PackingError::InconsistentBounds {
                evidence: format!("decision runs certify OPT <= {g_chk}"),
                lower,
                upper,
            });
        }
    }

    if best_val <= 0.0 {
        return Err(PackingError::InconsistentBounds {
            evidence: "no feasible point with positive value exists".into(),
            lower,
            upper,
        });
    }
    if best_val > hi * (1.0 + 1e-9) {
        // A no-return pushed the certified ceiling below a value some phase
        // actually achieved: the two certificates cannot both be right.
        return Err(PackingError::InconsistentBounds {
            evidence: format!("a feasible point achieves {best_val} yet decisions certify OPT <= {hi}"),
            lower,
            upper,
        });
    }

    let lambda_final = measured_lambda_max(instance, &best_x, 1.0, seed.child(3), config)?;
    Ok(OptimizeOutcome {
        x: best_x,
        value: best_val,
        q_run: hi / best_val,
        lambda_max: lambda_final,
        bounds: (lo_certified.max(best_val), hi),
        params,
        phases,
    })
}

/// Default run parameters from the measured `ρ = λ_max(𝒜(c))`.
fn default_params_for(n: usize, rho: f64, config: &PackingConfig) -> DecisionParams {
    crate::decision::default_params(n, rho.max(1.0), config)
}

/// Convenience: reference-mode configuration used widely in tests.
pub fn reference_config() -> PackingConfig {
    PackingConfig { mode: AccessMode::DenseReference, ..PackingConfig::default() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use soc::Partition;

    use crate::instance::SupportMask;

    #[test]
    fn single_edge_optimum_recovered() {
        // n = 2, P = I, support = the single edge: 𝒜(x) = x·L_e has top
        // eigenvalue 2x, so OPT = 1/2.
        let p_dense = DMatrix::identity(2, 2);
        let mask = SupportMask::Soc(Partition::full(2));
        let inst = PackingInstance::new(&p_dense, mask, 0.1, 10.0).unwrap();
        let out = packing_optimize(&inst, 0.1, SplitSeed::new(11), &reference_config()).unwrap();
        assert!((out.value - 0.5).abs() < 1e-9, "value {}", out.value);
        assert!(out.lambda_max <= 1.0 + 1e-8);
        assert!(out.q_run >= 1.0);
    }

    #[test]
    fn empty_support_with_positive_lower_bound_is_inconsistent() {
        // No supported pairs means OPT = 0, but the caller certifies
        // OPT ∈ [5, 10]: every decision run no-returns (mass stays zero),
        // so the certified ceiling drops below the claimed floor.
        let p_dense = DMatrix::identity(2, 2);
        let mask = SupportMask::Soc(Partition::new(2, vec![vec![0]]).unwrap());
        let inst = PackingInstance::new(&p_dense, mask, 5.0, 10.0).unwrap();
        let err =
            packing_optimize(&inst, 0.1, SplitSeed::new(7), &reference_config()).unwrap_err();
        assert!(matches!(err, PackingError::InconsistentBounds { .. }), "got {err}");
    }
}
