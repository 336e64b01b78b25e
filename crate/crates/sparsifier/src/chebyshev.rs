//! Chebyshev polynomial filters for functions of the multiplicative-weights
//! state.
//!
//! The outer loop needs `exp(-S)` (traces) and `exp(-S/2)` (embeddings)
//! applied to vectors, where `S` is symmetric positive semidefinite with a
//! known spectral bound `R`. Both are approximated by Chebyshev
//! interpolants on `[0, R]` evaluated via Clenshaw recurrences, so one
//! application costs `degree` many `S`-matvecs. Because the polynomial is a
//! scalar function of `S`, pointwise error bounds on `[0, R]` transfer to
//! operator error bounds in the spectral norm.
//!
//! The embedding filter is deliberately one-sided: the measured sup error
//! is added as a constant shift so the filtered value never falls below the
//! true half-exponential, and exceeds it by a controlled relative margin.
//! Downstream window arithmetic (where an underestimate and an overestimate
//! are not interchangeable) relies on that orientation.

use nalgebra::DVector;

use crate::SparsifierError;

/// A fitted Chebyshev interpolant of a scalar function on `[0, r]`,
/// optionally shifted upward to make it a one-sided overestimate.
#[derive(Debug, Clone)]
pub struct ChebApprox {
    r: f64,
    coeffs: Vec<f64>,
    shift: f64,
    sup_err: f64,
}

impl ChebApprox {
    /// Interpolates `f` at the `degree+1` Chebyshev nodes of `[0, r]` and
    /// measures the sup error on a dense grid.
    fn fit(f: impl Fn(f64) -> f64, r: f64, degree: usize) -> Self {
        let m = degree + 1;
        // Node values f(x_j) at x_j mapped from cos(π(j+½)/m).
        let values: Vec<f64> = (0..m)
            .map(|j| {
                let u = (std::f64::consts::PI * (j as f64 + 0.5) / m as f64).cos();
                f(r * (u + 1.0) / 2.0)
            })
            .collect();
        let mut coeffs = vec![0.0; m];
        for (k, c) in coeffs.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (j, v) in values.iter().enumerate() {
                acc += v * (std::f64::consts::PI * k as f64 * (j as f64 + 0.5) / m as f64).cos();
            }
            *c = 2.0 * acc / m as f64;
        }
        coeffs[0] /= 2.0;
        let mut approx = Self { r, coeffs, shift: 0.0, sup_err: 0.0 };
        let grid = 8 * m + 64;
        let mut sup = 0.0f64;
        for i in 0..=grid {
            let x = r * i as f64 / grid as f64;
            sup = sup.max((approx.eval_raw(x) - f(x)).abs());
        }
        approx.sup_err = sup;
        approx
    }

    /// Polynomial value without the one-sided shift.
    fn eval_raw(&self, x: f64) -> f64 {
        let u = if self.r > 0.0 { 2.0 * x / self.r - 1.0 } else { -1.0 };
        let mut b1 = 0.0;
        let mut b2 = 0.0;
        for k in (1..self.coeffs.len()).rev() {
            let b = self.coeffs[k] + 2.0 * u * b1 - b2;
            b2 = b1;
            b1 = b;
        }
        self.coeffs[0] + u * b1 - b2
    }

    /// Filter value at `x`, including the shift.
    pub fn eval(&self, x: f64) -> f64 {
        self.eval_raw(x) + self.shift
    }

    /// Upper end of the fit window.
    pub fn r(&self) -> f64 {
        self.r
    }

    /// Measured sup error of the raw interpolant on `[0, r]`.
    pub fn sup_err(&self) -> f64 {
        self.sup_err
    }

    /// One-sided shift added to every evaluation.
    pub fn shift(&self) -> f64 {
        self.shift
    }

    /// Polynomial degree.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    /// Applies the filter to a vector: `p(S)·v` via the operator Clenshaw
    /// recurrence, costing `degree` applications of `S`.
    pub fn apply(
        &self,
        s_matvec: &dyn Fn(&DVector<f64>) -> DVector<f64>,
        v: &DVector<f64>,
    ) -> DVector<f64> {
        let n = v.len();
        // U = (2/r)·S − I, the spectrum mapped onto [−1, 1].
        let u_apply = |w: &DVector<f64>| -> DVector<f64> {
            if self.r > 0.0 {
                s_matvec(w) * (2.0 / self.r) - w
            } else {
                -w.clone()
            }
        };
        let mut b1 = DVector::zeros(n);
        let mut b2 = DVector::zeros(n);
        for k in (1..self.coeffs.len()).rev() {
            let b = v * self.coeffs[k] + u_apply(&b1) * 2.0 - b2;
            b2 = std::mem::replace(&mut b1, b);
        }
        v * (self.coeffs[0] + self.shift) + u_apply(&b1) - b2
    }
}

/// Grows the interpolation degree until the sup error meets `target`,
/// returning the accepted fit.
fn fit_to_target(
    f: impl Fn(f64) -> f64 + Copy,
    r: f64,
    target: f64,
    cap: usize,
) -> Result<ChebApprox, SparsifierError> {
    let mut degree = 8usize.min(cap.max(1));
    loop {
        let approx = ChebApprox::fit(f, r, degree);
        if approx.sup_err <= target {
            return Ok(approx);
        }
        if degree >= cap {
            return Err(SparsifierError::PolynomialDegreeExceeded {
                needed: degree * 3 / 2,
                cap,
                target,
            });
        }
        degree = (degree * 3 / 2).max(degree + 4).min(cap);
    }
}

/// One-sided filter for `e^{-x/2}` on `[0, r]`: the result `M` satisfies
/// `e^{-x/2} ≤ M(x) ≤ (1 + margin)·e^{-x/2}` everywhere on the window.
///
/// The sup error is driven below `margin·e^{-r/2}/2`, then added back as a
/// constant shift; since `e^{-x/2} ≥ e^{-r/2}` on the window, the additive
/// slack stays below a `margin` fraction of the function value pointwise.
///
/// # Errors
///
/// [`SparsifierError::PolynomialDegreeExceeded`] when the degree cap cannot
/// reach the target (large `r` with a small cap).
pub fn half_exp_approx(r: f64, margin: f64, cap: usize) -> Result<ChebApprox, SparsifierError> {
    if !(r >= 0.0 && r.is_finite() && margin > 0.0 && margin < 0.5) {
        return Err(SparsifierError::BadParameter {
            what: format!("half-exponential window r = {r}, margin = {margin}"),
        });
    }
    let r = r.max(1e-9);
    let target = 0.45 * margin * (-r / 2.0).exp();
    let mut approx = fit_to_target(|x| (-x / 2.0).exp(), r, target, cap)?;
    approx.shift = approx.sup_err * (1.0 + 1e-9) + f64::MIN_POSITIVE;
    Ok(approx)
}

/// Two-sided filter for `e^{-x}` on `[0, r]` with absolute error at most
/// `eps_abs`.
///
/// # Errors
///
/// [`SparsifierError::PolynomialDegreeExceeded`] when the degree cap cannot
/// reach the target.
pub fn tight_exp_approx(r: f64, eps_abs: f64, cap: usize) -> Result<ChebApprox, SparsifierError> {
    if !(r >= 0.0 && r.is_finite() && eps_abs > 0.0) {
        return Err(SparsifierError::BadParameter {
            what: format!("exponential window r = {r}, eps = {eps_abs}"),
        });
    }
    fit_to_target(|x| (-x).exp(), r.max(1e-9), eps_abs, cap)
}
