//! The multiplicative-weights state and its explicit term representation.
//!
//! Every weight vector this layer produces — oracle answers, per-round
//! averages, the final reweighting — is a nonnegative combination of masked
//! cross-piece clique unions. Keeping that structure explicit is what makes
//! the hidden-operator pipeline possible: Laplacian matvecs against such a
//! combination cost piece-boundary work instead of `n²`, and the recorded
//! terms are exactly what the output sparsifier samples from.

use std::cell::RefCell;

use nalgebra::{DMatrix, DVector};

use linalg_core::LinearOperator;
use soc::MaskedSoc;

use crate::invsqrt::InvSqrtOperator;
use crate::SparsifierError;

/// A nonnegative combination `Σ c_j · x_j` of masked clique unions.
#[derive(Debug, Clone)]
pub struct TermSum {
    n: usize,
    terms: Vec<(f64, MaskedSoc)>,
}

impl TermSum {
    /// Empty sum on `n` vertices.
    pub fn new(n: usize) -> Self {
        Self { n, terms: Vec::new() }
    }

    /// Ambient vertex count.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of stored terms.
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    /// Whether the sum has no terms.
    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// The stored `(coefficient, term)` pairs.
    pub fn terms(&self) -> &[(f64, MaskedSoc)] {
        &self.terms
    }

    /// Appends `c · x`; zero coefficients are dropped.
    pub fn push(&mut self, c: f64, x: MaskedSoc) {
        debug_assert_eq!(x.n(), self.n, "term ambient size mismatch");
        debug_assert!(c >= 0.0 && c.is_finite(), "coefficients must be nonnegative");
        if c > 0.0 {
            self.terms.push((c, x));
        }
    }

    /// Multiplies every coefficient by `f`.
    pub fn rescale(&mut self, f: f64) {
        debug_assert!(f >= 0.0 && f.is_finite());
        for (c, _) in &mut self.terms {
            *c *= f;
        }
    }

    /// A copy with every coefficient multiplied by `f`.
    pub fn scaled(&self, f: f64) -> Self {
        let mut out = self.clone();
        out.rescale(f);
        out
    }

    /// The Laplacian-times-vector product `𝓛(Σ c_j x_j)·u`.
    pub fn matvec(&self, u: &DVector<f64>) -> DVector<f64> {
        let mut acc = DVector::zeros(self.n);
        for (c, x) in &self.terms {
            acc += x.matvec(u) * *c;
        }
        acc
    }

    /// Total pair mass `Σ c_j · ⟨1, x_j⟩`.
    pub fn pair_mass(&self) -> f64 {
        self.terms.iter().map(|(c, x)| c * x.pair_mass()).sum()
    }

    /// Dense Laplacian of the combination.
    ///
    /// # Errors
    ///
    /// Propagates the dense-cap guard of the underlying terms.
    pub fn laplacian_dense(&self, cap: usize) -> Result<DMatrix<f64>, SparsifierError> {
        let mut acc = DMatrix::zeros(self.n, self.n);
        for (c, x) in &self.terms {
            acc += x.laplacian_dense(cap)? * *c;
        }
        Ok(acc)
    }

    /// The weighted sum `Σ_e x_e · d²(e)` for a pairwise function `d²`,
    /// enumerating the pairs of every piece once per term.
    pub fn weighted_pair_sum(&self, d2: &dyn Fn(usize, usize) -> f64) -> f64 {
        let mut acc = 0.0;
        for (c, x) in &self.terms {
            for (w, partition) in x.soc().terms() {
                let scale = c * w;
                if scale == 0.0 {
                    continue;
                }
                for piece in partition.pieces() {
                    for (a, &u) in piece.iter().enumerate() {
                        for &v in piece.iter().skip(a + 1) {
                            let masked = x.mask().map(|m| m.mask(u, v)).unwrap_or(true);
                            if masked {
                                acc += scale * d2(u, v);
                            }
                        }
                    }
                }
            }
        }
        acc
    }

    /// Moves all terms of `other` into `self` with an extra factor `c`.
    pub fn absorb(&mut self, c: f64, other: &TermSum) {
        for (w, x) in &other.terms {
            self.push(c * w, x.clone());
        }
    }
}

/// The inverse-square-root preconditioner of one homotopy phase.
///
/// Three realizations share one interface: an explicit dense matrix
/// (reference mode), a scalar multiple of the centering projector (first
/// phase), and a preconditioned-Krylov operator (sketched mode).
pub enum PhaseP<'a> {
    /// Explicit symmetric matrix.
    Dense(DMatrix<f64>),
    /// `factor · Π`, the centering projector scaled.
    Scalar {
        /// Ambient dimension.
        n: usize,
        /// Multiplier in front of the projector.
        factor: f64,
    },
    /// Quadrature of preconditioned shifted solves against the hidden
    /// operator.
    Krylov(InvSqrtOperator<'a>),
}

impl std::fmt::Debug for PhaseP<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PhaseP::Dense(m) => write!(f, "PhaseP::Dense({}×{})", m.nrows(), m.ncols()),
            PhaseP::Scalar { n, factor } => write!(f, "PhaseP::Scalar(n = {n}, factor = {factor})"),
            PhaseP::Krylov(op) => write!(f, "PhaseP::Krylov(n = {})", op.dim()),
        }
    }
}

impl LinearOperator for PhaseP<'_> {
    fn dim(&self) -> usize {
        match self {
            PhaseP::Dense(m) => m.nrows(),
            PhaseP::Scalar { n, .. } => *n,
            PhaseP::Krylov(op) => op.dim(),
        }
    }

    fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        match self {
            PhaseP::Dense(m) => m * v,
            PhaseP::Scalar { n, factor } => {
                let mean = v.sum() / *n as f64;
                v.map(|x| factor * (x - mean))
            }
            PhaseP::Krylov(op) => op.apply(v),
        }
    }

    fn as_dense(&self) -> Option<DMatrix<f64>> {
        match self {
            PhaseP::Dense(m) => Some(m.clone()),
            PhaseP::Scalar { n, factor } => {
                let n = *n;
                let mut m = DMatrix::from_element(n, n, -factor / n as f64);
                for i in 0..n {
                    m[(i, i)] += factor;
                }
                Some(m)
            }
            PhaseP::Krylov(op) => op.dense_cached(),
        }
    }
}

/// The Gibbs-state bookkeeping of the outer loop: `S_t = Σ η·P𝓛(x_j)P`
/// held as preconditioned term sums, with an optional dense twin.
pub struct MmwState<'a> {
    p: &'a PhaseP<'a>,
    inner: TermSum,
    rounds: usize,
    s_dense: Option<RefCell<DMatrix<f64>>>,
    p_dense: Option<DMatrix<f64>>,
}

impl<'a> MmwState<'a> {
    /// Fresh state `S = 0` around the preconditioner `p`.
    ///
    /// When `want_dense` is set, a dense twin of `S` is maintained; this
    /// requires a dense materialization of `p` and `n` within `dense_cap`.
    ///
    /// # Errors
    ///
    /// [`SparsifierError::BadParameter`] when the dense twin is requested
    /// but unavailable.
    pub fn new(p: &'a PhaseP<'a>, want_dense: bool, dense_cap: usize) -> Result<Self, SparsifierError> {
        let n = p.dim();
        let (s_dense, p_dense) = if want_dense {
            if n > dense_cap {
                return Err(SparsifierError::BadParameter {
                    what: format!("dense state requested for n = {n} above cap {dense_cap}"),
                });
            }
            let pd = p.as_dense().ok_or_else(|| SparsifierError::BadParameter {
                what: "dense state requested for a matrix-free preconditioner".into(),
            })?;
            (Some(RefCell::new(DMatrix::zeros(n, n))), Some(pd))
        } else {
            (None, None)
        };
        Ok(Self { p, inner: TermSum::new(n), rounds: 0, s_dense, p_dense })
    }

    /// Ambient dimension.
    pub fn n(&self) -> usize {
        self.p.dim()
    }

    /// The preconditioner as an operator.
    pub fn p_op(&self) -> &'a PhaseP<'a> {
        self.p
    }

    /// Dense preconditioner, when the twin is enabled.
    pub fn p_dense(&self) -> Option<&DMatrix<f64>> {
        self.p_dense.as_ref()
    }

    /// Rounds absorbed so far.
    pub fn rounds(&self) -> usize {
        self.rounds
    }

    /// Spectral bound on `S`: every absorbed step satisfies `G ⪯ Π`, so
    /// `‖S‖ ≤ η·rounds` with `η = ½`.
    pub fn r_bound(&self) -> f64 {
        0.5 * self.rounds as f64
    }

    /// The product `S·v = P·𝓛(inner)·P·v`.
    pub fn s_matvec(&self, v: &DVector<f64>) -> DVector<f64> {
        if self.inner.is_empty() {
            return DVector::zeros(self.n());
        }
        let pv = self.p.apply(v);
        let mid = self.inner.matvec(&pv);
        self.p.apply(&mid)
    }

    /// Dense twin of `S`, when enabled.
    pub fn s_dense(&self) -> Option<DMatrix<f64>> {
        self.s_dense.as_ref().map(|s| s.borrow().clone())
    }

    /// Absorbs one round: each oracle answer enters with weight
    /// `eta_over_m`, and the dense twin (if any) accumulates
    /// `eta_over_m · P𝓛(x)P` exactly.
    ///
    /// # Errors
    ///
    /// Propagates dense-cap failures from the twin update.
    pub fn add_round(
        &mut self,
        answers: &[MaskedSoc],
        eta_over_m: f64,
        dense_cap: usize,
    ) -> Result<(), SparsifierError> {
        if let (Some(s), Some(pd)) = (&self.s_dense, &self.p_dense) {
            let mut step = DMatrix::zeros(self.n(), self.n());
            for x in answers {
                step += x.laplacian_dense(dense_cap)?;
            }
            let update = pd * step * pd * eta_over_m;
            let mut s = s.borrow_mut();
            *s += &update;
            // Symmetrize to keep float drift out of the eigensolves.
            let sym = (s.clone() + s.transpose()) * 0.5;
            *s = sym;
        }
        for x in answers {
            self.inner.push(eta_over_m, x.clone());
        }
        self.rounds += 1;
        Ok(())
    }

    /// Dense `exp(-S)` and its trace, from the twin.
    pub fn exp_dense(&self) -> Option<(DMatrix<f64>, f64)> {
        let s = self.s_dense()?;
        let eig = s.symmetric_eigen();
        let exp = &eig.eigenvectors
            * DMatrix::from_diagonal(&eig.eigenvalues.map(|l| (-l).exp()))
            * eig.eigenvectors.transpose();
        let trace = exp.trace();
        Some((exp, trace))
    }
}
