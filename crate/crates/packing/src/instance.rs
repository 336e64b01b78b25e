//! Packing instances: the operator `P`, the clique-structured support
//! indicator `c`, and certified value bounds.

use nalgebra::{DMatrix, DVector};
use soc::{AsocRep, MaskedSoc, Partition, SocRep};

use linalg_core::LinearOperator;

use crate::PackingError;

/// The 0/1 support indicator `c`, exactly representable by the clique
/// machinery: either the same-piece pairs of a partition or the cross-piece
/// pairs of an anti-clique mask.
#[derive(Debug, Clone)]
pub enum SupportMask {
    /// `c_e = 1` iff both endpoints share a piece.
    Soc(Partition),
    /// `c_e = 1` iff both endpoints lie in the mask support in different
    /// pieces.
    Asoc(AsocRep),
}

impl SupportMask {
    /// Ambient size `n`.
    pub fn n(&self) -> usize {
        match self {
            SupportMask::Soc(p) => p.n(),
            SupportMask::Asoc(a) => a.n(),
        }
    }

    /// Whether the pair `(u, v)` is in the support.
    pub fn contains(&self, u: usize, v: usize) -> bool {
        match self {
            SupportMask::Soc(p) => p.same_piece(u, v),
            SupportMask::Asoc(a) => a.mask(u, v),
        }
    }

    /// Number of supported pairs `|E_c| = c^T c = c^T 1`.
    pub fn edge_count(&self) -> u128 {
        match self {
            SupportMask::Soc(p) => p.same_piece_pairs(),
            SupportMask::Asoc(a) => {
                let s = a.partition().support_len() as u128;
                s * s.saturating_sub(1) / 2 - a.partition().same_piece_pairs()
            }
        }
    }

    /// The initial iterate `w_0 = c` as a masked SOC.
    ///
    /// For a SOC mask the indicator folds into the clique term directly; for
    /// an ASOC mask the SOC factor is all-ones and the mask carries the
    /// structure.
    pub fn initial_iterate(&self) -> MaskedSoc {
        let n = self.n();
        match self {
            SupportMask::Soc(p) => {
                let soc = SocRep::new(n, vec![(1.0, p.clone())]).expect("valid term");
                MaskedSoc::new(soc, None).expect("no mask to mismatch")
            }
            SupportMask::Asoc(a) => {
                let soc = SocRep::new(n, vec![(1.0, Partition::full(n))]).expect("valid term");
                MaskedSoc::new(soc, Some(a.clone())).expect("ambient sizes match")
            }
        }
    }

    /// Wraps an arbitrary SOC `y` as the masked product `y ∘ c`.
    pub fn masked(&self, y: SocRep) -> MaskedSoc {
        match self {
            SupportMask::Soc(p) => {
                let n = y.n();
                let folded: Vec<(f64, Partition)> = y
                    .terms()
                    .iter()
                    .map(|(w, q)| (*w, soc::mutual_refinement(q, p)))
                    .collect();
                let soc = SocRep::new(n, folded).expect("refinement stays valid");
                MaskedSoc::new(soc, None).expect("no mask to mismatch")
            }
            SupportMask::Asoc(a) => {
                MaskedSoc::new(y, Some(a.clone())).expect("ambient sizes match")
            }
        }
    }
}

/// A packing problem `max c^T x  s.t.  Σ_e x_e·P L_e P ⪯ I, x ≥ 0,
/// support(x) ⊆ support(c)`, with caller-certified `OPT ∈ [lower, upper]`.
pub struct PackingInstance<'a> {
    p_op: &'a dyn LinearOperator,
    support: SupportMask,
    lower: f64,
    upper: f64,
}

impl<'a> PackingInstance<'a> {
    /// Validates dimensions and bounds.
    ///
    /// # Errors
    ///
    /// [`PackingError::BadParameter`] when the mask ambient size differs from
    /// the operator dimension or the bounds are not `0 < lower ≤ upper`.
    pub fn new(
        p_op: &'a dyn LinearOperator,
        support: SupportMask,
        lower: f64,
        upper: f64,
    ) -> Result<Self, PackingError> {
        if support.n() != p_op.dim() {
            return Err(PackingError::BadParameter {
                what: format!(
                    "support ambient {} != operator dimension {}",
                    support.n(),
                    p_op.dim()
                ),
            });
        }
        if !(lower > 0.0 && lower.is_finite() && upper >= lower && upper.is_finite()) {
            return Err(PackingError::BadParameter {
                what: format!("need 0 < lower <= upper, got [{lower}, {upper}]"),
            });
        }
        Ok(Self { p_op, support, lower, upper })
    }

    /// Ambient dimension `n`.
    pub fn n(&self) -> usize {
        self.p_op.dim()
    }

    /// The operator `P`.
    pub fn p_op(&self) -> &dyn LinearOperator {
        self.p_op
    }

    /// The support indicator.
    pub fn support(&self) -> &SupportMask {
        &self.support
    }

    /// Certified lower bound on the optimum value.
    pub fn lower(&self) -> f64 {
        self.lower
    }

    /// Certified upper bound on the optimum value.
    pub fn upper(&self) -> f64 {
        self.upper
    }

    /// One application of `𝒜(w) = P 𝓛(w) P` to a vector (three matvecs).
    pub fn a_apply(&self, w: &MaskedSoc, v: &DVector<f64>) -> DVector<f64> {
        let pv = self.p_op.apply(v);
        let lpv = w.matvec(&pv);
        self.p_op.apply(&lpv)
    }

    /// Dense twin of `𝒜(w)`, when `P` has one.
    pub fn a_dense(&self, w: &MaskedSoc, cap: usize) -> Result<Option<DMatrix<f64>>, PackingError> {
        let Some(p) = self.p_op.as_dense() else {
            return Ok(None);
        };
        let lap = w.laplacian_dense(cap)?;
        Ok(Some(&p * lap * &p))
    }

    /// Gradient entry `⟨A_e, Y⟩ = (P(e_u − e_v))^T Y (P(e_u − e_v))` against a
    /// dense `Y` — the reference-mode oracle for tests and duals.
    pub fn a_star_entry(&self, y: &DMatrix<f64>, u: usize, v: usize) -> f64 {
        let n = self.n();
        let mut chi = DVector::zeros(n);
        chi[u] = 1.0;
        chi[v] = -1.0;
        let pchi = self.p_op.apply(&chi);
        (y * &pchi).dot(&pchi)
    }
}
