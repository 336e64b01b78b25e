//! The matrix multiplicative-weights outer loop with a packing oracle.
//!
//! Each round reads the Gibbs state `Y_t = exp(-S_t)/Tr exp(-S_t)`,
//! embeds its preconditioned gradient geometry into a point cloud,
//! approximates the gradient by a ladder of cross-piece clique indicators,
//! asks the width-independent packing optimizer for a near-best feasible
//! reweighting on each indicator's support, and absorbs the averaged
//! answer into the state with learning rate `η = ½`. Every answer is
//! feasible for `{x ≥ 0 : P𝓛(x)P ⪯ Π}`, so the running average
//! spectrally lower-bounds the target at a rate the measured oracle
//! quality `Q` certifies: after `T = ⌈c·m·Q·ln n⌉` rounds the average
//! satisfies `(1/F)·L ⪯ 𝓛(x̄) ⪯ L` with `F = 2·c·m·Q`.
//!
//! The round count is planned from the first round's measured family size
//! and oracle quality, then clamped by configuration; the certified factor
//! always reports the measured quantities rather than the planning
//! constants.

use gridhash::{asoc_approximation, CliqueTerm, PointCloud};
use linalg_core::{LinearOperator, SplitSeed};
use nalgebra::DMatrix;
use packing::{packing_optimize, PackingInstance, SupportMask};
use soc::MaskedSoc;

use crate::embed::mmw_embed;
use crate::estimate::{trace_exp_estimate, trace_pyp_estimate};
use crate::state::{MmwState, PhaseP, TermSum};
use crate::{SparsifierConfig, SparsifierError};

/// Learning rate of the outer loop.
const ETA: f64 = 0.5;

/// Per-term overestimate factor of the rounding ladder: every indicator
/// weight obeys `g̃ ≤ β·g` entrywise.
const BETA: f64 = 8.0;

/// Weight-scale bounds of the target, from which each oracle call derives
/// certified optimum bounds.
#[derive(Debug, Clone, Copy)]
pub struct MdrBounds {
    /// Lower bound on every pair weight of the (regularized) target.
    pub pair_floor: f64,
    /// Upper bound on every pair weight.
    pub max_weight: f64,
}

impl MdrBounds {
    /// Validates `0 < pair_floor ≤ max_weight`.
    ///
    /// # Errors
    ///
    /// [`SparsifierError::BadParameter`] outside the domain.
    pub fn new(pair_floor: f64, max_weight: f64) -> Result<Self, SparsifierError> {
        if !(pair_floor > 0.0 && pair_floor.is_finite() && max_weight >= pair_floor) {
            return Err(SparsifierError::BadParameter {
                what: format!("weight bounds [{pair_floor}, {max_weight}]"),
            });
        }
        Ok(Self { pair_floor, max_weight })
    }

    /// Weight ratio `ρ = max/min`, the width the truncation guard charges.
    pub fn rho(&self) -> f64 {
        self.max_weight / self.pair_floor
    }
}

/// Measurements of one outer round.
#[derive(Debug, Clone, Copy)]
pub struct RoundRecord {
    /// Round index (0-based).
    pub round: usize,
    /// Partition-function estimate.
    pub z: f64,
    /// Projected-trace estimate (calibrated one-sided value).
    pub pyp: f64,
    /// Distance threshold handed to the rounding ladder.
    pub gamma: f64,
    /// Family size (indicator count, including empty ones).
    pub m: usize,
    /// Measured step gain `⟨G_t, Y_t⟩` (dense) or its sketched proxy.
    pub gain: f64,
    /// Worst oracle quality among the round's calls.
    pub q_round: f64,
    /// Pair mass of the averaged answer.
    pub mass: f64,
}

/// Result of the outer loop.
#[derive(Debug, Clone)]
pub struct MdrOutcome {
    /// Averaged reweighting `x̄ = (1/T)·Σ x_t`.
    pub x_bar: TermSum,
    /// Certified sandwich factor `2·c·m·Q` from measured quantities.
    pub factor_certified: f64,
    /// Rounds executed.
    pub rounds: usize,
    /// Rounds planned after the first round's measurements.
    pub t_planned: usize,
    /// Family size (maximum over rounds; constant in practice).
    pub m: usize,
    /// Worst oracle quality over all rounds.
    pub q_max: f64,
    /// Per-round measurements.
    pub records: Vec<RoundRecord>,
    /// Dense step matrices `G_t` (only when recording is enabled).
    pub g_dense_trace: Vec<DMatrix<f64>>,
}

/// Truncation guard: the aggressiveness `α` at which gradient entries
/// below `γ/α` may be dropped while retaining at least a quarter of the
/// weighted gradient mass, for any weight vector of ratio at most `ρ`.
///
/// The rule is `α = (40/9)·ρ·n⁴·k²` with `n` points in `k` dimensions.
///
/// # Errors
///
/// [`SparsifierError::BadParameter`] when `γ` does not dominate the
/// largest per-coordinate gap (the ladder would be inadmissible) or
/// `ρ < 1`.
pub fn truncation_guard(
    points: &PointCloud,
    gamma: f64,
    rho: f64,
) -> Result<f64, SparsifierError> {
    if !(rho >= 1.0 && rho.is_finite()) {
        return Err(SparsifierError::BadParameter { what: format!("weight ratio rho = {rho}") });
    }
    let maxgap = points.max_coordinate_gap_squared();
    if !(gamma.is_finite() && gamma >= maxgap * (1.0 - 1e-12)) {
        return Err(SparsifierError::BadParameter {
            what: format!("gamma = {gamma} below the largest coordinate gap {maxgap}"),
        });
    }
    let n = points.n() as f64;
    let k = points.k() as f64;
    Ok((40.0 / 9.0) * rho * n.powi(4) * k * k)
}

/// Runs the outer loop against the preconditioner `p` and weight bounds
/// of the hidden target.
///
/// # Errors
///
/// Propagates estimator, rounding and packing failures; dense-path
/// requirements surface as [`SparsifierError::BadParameter`].
pub fn oracle_mdr(
    p: &PhaseP,
    bounds: &MdrBounds,
    delta: f64,
    seed: SplitSeed,
    config: &SparsifierConfig,
) -> Result<MdrOutcome, SparsifierError> {
    let n = p.dim();
    if n < 2 {
        return Err(SparsifierError::BadParameter { what: format!("n = {n} too small") });
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(SparsifierError::BadParameter { what: format!("delta = {delta} not in (0,1)") });
    }
    MdrBounds::new(bounds.pair_floor, bounds.max_weight)?;

    let want_dense = matches!(config.mode, packing::AccessMode::DenseReference)
        || config.exact_embed()
        || config.record_dense_trace;
    let mut state = MmwState::new(p, want_dense, config.dense_cap)?;

    let t_cap = config.t_rounds_cap.max(1);
    // Flat per-round failure share, reserved against the cap so the plan
    // can only leave budget unspent.
    let delta_round = delta / (2.0 * t_cap as f64);

    let mut x_bar = TermSum::new(n);
    let mut records = Vec::new();
    let mut g_dense_trace = Vec::new();
    let mut t_planned = t_cap;
    let mut m_family = 0usize;
    let mut q_max = 1.0f64;

    let mut t = 0usize;
    while t < t_planned {
        let round_seed = seed.child(t as u64);
        let r = state.r_bound();
        let z_est = trace_exp_estimate(&state, r, delta_round / 4.0, round_seed.child(0), config)?;
        let pyp_est = trace_pyp_estimate(&state, r, delta_round / 4.0, round_seed.child(1), config)?;
        let embed = mmw_embed(&state, r, delta_round / 4.0, round_seed.child(2), config)?;
        let cloud = embed.cloud;

        // The ladder threshold: the calibrated projected trace pushed back
        // to an overestimate, floored by admissibility of the grid.
        let gamma_trace =
            if pyp_est.exact { pyp_est.value } else { pyp_est.value / 0.92 };
        let maxgap = cloud.max_coordinate_gap_squared();
        let gamma = gamma_trace.max(maxgap * (1.0 + 1e-9)).max(f64::MIN_POSITIVE);
        let alpha = match config.alpha_override {
            Some(a) => a,
            None => truncation_guard(&cloud, gamma, bounds.rho())?,
        };

        let family = asoc_approximation(
            &cloud,
            BETA,
            gamma,
            alpha,
            delta_round / 8.0,
            round_seed.child(3),
            &config.grid,
        )?;
        let m = family.term_count();
        m_family = m_family.max(m);

        let mut answers: Vec<MaskedSoc> = Vec::new();
        let mut q_round = 1.0f64;
        let upper = 0.25 * (n as f64).powi(4) * bounds.max_weight;
        for (i, (_, term)) in family.terms().iter().enumerate() {
            let asoc = match term {
                CliqueTerm::Asoc(a) => a.clone(),
                CliqueTerm::Soc(_) => continue,
            };
            let mask = SupportMask::Asoc(asoc);
            let count = mask.edge_count();
            if count == 0 {
                continue;
            }
            let lower = (count as f64) * bounds.pair_floor / 2.0;
            let instance = PackingInstance::new(p, mask, lower.min(upper), upper)?;
            let out = packing_optimize(
                &instance,
                delta_round / (2.0 * m as f64),
                round_seed.child(4 + i as u64),
                &config.packing,
            )?;
            q_round = q_round.max(out.q_run);
            answers.push(out.x);
        }
        q_max = q_max.max(q_round);

        let inv_m = 1.0 / m.max(1) as f64;
        let mass: f64 = answers.iter().map(|x| inv_m * x.pair_mass()).sum();

        // Measured gain of the absorbed step against the current state.
        let gain = if let (Some(pd), Some((exp, trace))) = (state.p_dense(), state.exp_dense()) {
            let mut step = DMatrix::zeros(n, n);
            for x in &answers {
                step += x.laplacian_dense(config.dense_cap)? * inv_m;
            }
            let g = pd * step * pd;
            let value = (&g * (&exp / trace)).trace();
            if config.record_dense_trace {
                g_dense_trace.push(g);
            }
            value
        } else {
            let d2 = |u: usize, v: usize| cloud.squared_distance(u, v);
            answers.iter().map(|x| {
                let mut one = TermSum::new(n);
                one.push(inv_m, x.clone());
                one.weighted_pair_sum(&d2)
            }).sum()
        };

        records.push(RoundRecord {
            round: t,
            z: z_est.value,
            pyp: pyp_est.value,
            gamma,
            m,
            gain,
            q_round,
            mass,
        });

        state.add_round(&answers, ETA * inv_m, config.dense_cap)?;
        for x in &answers {
            x_bar.push(inv_m, x.clone());
        }

        if t == 0 {
            let formula = (config.t_constant
                * m as f64
                * q_round.max(1.0)
                * (n.max(2) as f64).ln())
            .ceil();
            t_planned = if formula.is_finite() { (formula as usize).clamp(1, t_cap) } else { t_cap };
        }
        t += 1;
    }

    let rounds = t;
    x_bar.rescale(1.0 / rounds.max(1) as f64);
    let factor_certified = 2.0 * config.t_constant * m_family.max(1) as f64 * q_max;

    Ok(MdrOutcome {
        x_bar,
        factor_certified,
        rounds,
        t_planned,
        m: m_family,
        q_max,
        records,
        g_dense_trace,
    })
}
