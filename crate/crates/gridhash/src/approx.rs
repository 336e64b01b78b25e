//! Clique-family approximations of implicit squared-distance vectors.

use linalg_core::SplitSeed;
use soc::AsocRep;

use crate::family::{CliqueTerm, FamilyParams, ScaledCliqueFamily};
use crate::grid::{grid_partition, interval_partition_1d};
use crate::{GridError, PointCloud};

/// Tunable constants of the rounding schemes.
///
/// Defaults follow the analysis; tests and callers may coarsen them to trade
/// approximation quality (which downstream consumers measure, not assume)
/// for fewer terms.
#[derive(Debug, Clone, Copy)]
pub struct GridConfig {
    /// Scale cap factor: `γ = soc_gamma_factor · k²` for grid rounding.
    pub soc_gamma_factor: f64,
    /// Trial count factor: `m = ⌈soc_trials_factor · log₂(n/δ)⌉`.
    pub soc_trials_factor: f64,
    /// Geometric ratio between consecutive interval scales.
    pub ladder_ratio: f64,
    /// Trials per interval scale: `⌈asoc_trials_factor · ln(n/δ)⌉`.
    pub asoc_trials_factor: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            soc_gamma_factor: 16.0,
            soc_trials_factor: 2.0,
            ladder_ratio: 1.1,
            asoc_trials_factor: 8.0,
        }
    }
}

/// Same-piece approximation of the *small* entries of `g`.
///
/// Draws `m = ⌈2·log₂(n/δ)⌉` grid partitions at box side `ρ = √(γ/k)` with
/// `γ = 16k²`, each weighted `β`. The summed vector `x` satisfies, with
/// probability at least `1 − δ`:
/// * `0 ≤ x ≤ α·1` with `α = βm` (deterministic);
/// * `x_e = 0` wherever `g_e > γ` (deterministic: such pairs never share a
///   box of diameter `ρ√k = √γ`);
/// * `x_e ≥ β` wherever `g_e ≤ 1` (each trial keeps such a pair together
///   with probability `≥ ½`).
///
/// Trial `i` draws from the seed's child stream `i`.
pub fn soc_approximation(
    points: &PointCloud,
    beta: f64,
    delta: f64,
    seed: SplitSeed,
    config: &GridConfig,
) -> Result<ScaledCliqueFamily, GridError> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(GridError::BadParameter { what: format!("beta = {beta} must be positive") });
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(GridError::BadParameter { what: format!("delta = {delta} not in (0,1)") });
    }
    let (n, k) = (points.n(), points.k());
    let gamma = config.soc_gamma_factor * (k as f64).powi(2);
    let rho = (gamma / k as f64).sqrt();
    let m = (config.soc_trials_factor * (n as f64 / delta).log2())
        .ceil()
        .max(1.0) as usize;
    let mut terms = Vec::with_capacity(m);
    for i in 0..m {
        let mut rng = seed.child(i as u64).rng();
        let p = grid_partition(points, rho, &mut rng);
        terms.push((beta, CliqueTerm::Soc(p)));
    }
    ScaledCliqueFamily::new(
        n,
        terms,
        FamilyParams { alpha: beta * m as f64, beta, gamma, m },
    )
}

/// Builds the geometric scale ladder: `ρ₁² = 4γ/(9α)`, multiplied by
/// `ladder_ratio` per rung until `ρ_p² ≥ γ/4`.
///
/// Consecutive rungs cover `[2.25ρ², 4ρ²)` with overlap as long as the
/// ratio stays below `4/3`, so every `g_e ∈ [γ/α, γ]` has a matched scale
/// `√g_e ∈ [1.5ρ_a, 2ρ_a)`.
fn scale_ladder(gamma: f64, alpha: f64, ratio: f64) -> Vec<f64> {
    let mut rhos = Vec::new();
    let mut rho = (4.0 * gamma / (9.0 * alpha)).sqrt();
    loop {
        rhos.push(rho);
        if rho * rho >= gamma / 4.0 {
            return rhos;
        }
        rho *= ratio;
    }
}

/// Cross-piece approximation of the *large* entries of a 1-d value list,
/// where `g_e = (q_u − q_v)²`.
///
/// For each scale in the ladder and each of `⌈8·ln(n/δ)⌉` trials, keeps the
/// points in random "black" intervals of length `ρ_a` and charges weight
/// `βρ_a²` to every cross-interval pair. Guarantees:
/// * each term is entrywise `≤ βg` (deterministic: a charged pair is split
///   at scale `ρ_a`, so `g_e > ρ_a²` and `βρ_a² < βg_e`);
/// * the summed family dominates the thresholded vector `g^{(≥γ/α)}` with
///   probability at least `1 − δ` (the matched scale splits a pair with
///   probability `≥ ¼` per trial, and then `βρ_a² ≥ 4ρ_a² ≥ g_e`).
///
/// Scale `a`, trial `i` draws from the seed's child stream `[a, i]`.
///
/// # Errors
///
/// [`GridError::GammaTooSmall`] when `γ` does not dominate the largest
/// squared pair difference; [`GridError::BadParameter`] for `β < 4`,
/// `α < 1`, or `δ ∉ (0,1)`.
pub fn asoc_approximation_1d(
    values: &[f64],
    beta: f64,
    gamma: f64,
    alpha: f64,
    delta: f64,
    seed: SplitSeed,
    config: &GridConfig,
) -> Result<ScaledCliqueFamily, GridError> {
    if !(beta >= 4.0 && beta.is_finite()) {
        return Err(GridError::BadParameter { what: format!("beta = {beta} must be ≥ 4") });
    }
    if !(alpha >= 1.0 && alpha.is_finite()) {
        return Err(GridError::BadParameter { what: format!("alpha = {alpha} must be ≥ 1") });
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(GridError::BadParameter { what: format!("delta = {delta} not in (0,1)") });
    }
    let n = values.len();
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let required = (max - min).powi(2);
    if n > 1 && gamma < required {
        return Err(GridError::GammaTooSmall { gamma, required });
    }
    let rhos = scale_ladder(gamma, alpha, config.ladder_ratio);
    let trials = (config.asoc_trials_factor * (n as f64 / delta).ln())
        .ceil()
        .max(1.0) as usize;
    let mut terms = Vec::with_capacity(rhos.len() * trials);
    for (a, &rho) in rhos.iter().enumerate() {
        for i in 0..trials {
            let mut rng = seed.descend(&[a as u64, i as u64]).rng();
            let (_, partition) = interval_partition_1d(values, rho, &mut rng);
            terms.push((beta * rho * rho, CliqueTerm::Asoc(AsocRep::new(partition))));
        }
    }
    let m = terms.len();
    ScaledCliqueFamily::new(n, terms, FamilyParams { alpha, beta, gamma, m })
}

/// Cross-piece approximation of the large entries of `g_e = ‖q_u − q_v‖²`
/// in `R^k`: the union of per-coordinate 1-d families, each run at failure
/// budget `δ/k`.
///
/// Since `g_e ≥ (q_{uj} − q_{vj})²` for every coordinate, each term stays
/// entrywise `≤ βg`; summing the per-coordinate coverage guarantees gives
/// `Σ g̃ ≥ g^{(≥γ/α)}` (the coordinate-thresholded vector) with probability
/// `≥ 1 − δ`. Coordinate `j` draws from the seed's child stream `j`.
///
/// # Errors
///
/// [`GridError::GammaTooSmall`] when `γ` is below the largest squared
/// single-coordinate difference.
pub fn asoc_approximation(
    points: &PointCloud,
    beta: f64,
    gamma: f64,
    alpha: f64,
    delta: f64,
    seed: SplitSeed,
    config: &GridConfig,
) -> Result<ScaledCliqueFamily, GridError> {
    let k = points.k();
    let mut terms = Vec::new();
    for j in 0..k {
        let coordinate = points.coordinate(j);
        let family = asoc_approximation_1d(
            &coordinate,
            beta,
            gamma,
            alpha,
            delta / k as f64,
            seed.child(j as u64),
            config,
        )?;
        terms.extend(family.terms().iter().cloned());
    }
    let m = terms.len();
    ScaledCliqueFamily::new(points.n(), terms, FamilyParams { alpha, beta, gamma, m })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ladder_covers_target_band() {
        for &alpha in &[1.0, 2.0, 10.0, 1000.0] {
            let gamma = 7.3;
            let rhos = scale_ladder(gamma, alpha, 1.1);
            assert!(rhos.last().unwrap().powi(2) >= gamma / 4.0);
            // Every g in [γ/α, γ] matches some rung: √g ∈ [1.5ρ, 2ρ).
            let mut g = gamma / alpha;
            while g <= gamma {
                assert!(
                    rhos.iter().any(|&r| {
                        let s = g.sqrt();
                        s >= 1.5 * r && s < 2.0 * r
                    }),
                    "g = {g} uncovered at alpha = {alpha}"
                );
                g *= 1.01;
            }
        }
    }

    #[test]
    fn single_scale_when_alpha_is_one() {
        // ρ₁² = 4γ/9 ≥ γ/4 already.
        assert_eq!(scale_ladder(1.0, 1.0, 1.1).len(), 1);
    }

    #[test]
    fn gamma_below_spread_is_rejected() {
        let err = asoc_approximation_1d(
            &[0.0, 10.0],
            4.0,
            1.0,
            1.0,
            0.1,
            SplitSeed::new(1),
            &GridConfig::default(),
        );
        assert!(matches!(err, Err(GridError::GammaTooSmall { .. })));
    }
}
