//! Weighted families of clique-shaped indicator terms.

use nalgebra::DMatrix;
use soc::{AsocRep, Partition, SocRep};

use crate::GridError;

/// One 0/1 indicator over pairs, in clique-representable form.
#[derive(Debug, Clone)]
pub enum CliqueTerm {
    /// Same-piece indicator of a partition.
    Soc(Partition),
    /// Cross-piece indicator within the mask's ambient support.
    Asoc(AsocRep),
}

impl CliqueTerm {
    /// Ambient size `n`.
    pub fn n(&self) -> usize {
        match self {
            CliqueTerm::Soc(p) => p.n(),
            CliqueTerm::Asoc(a) => a.n(),
        }
    }

    /// Indicator value on the pair `(u, v)`.
    pub fn contains(&self, u: usize, v: usize) -> bool {
        match self {
            CliqueTerm::Soc(p) => p.same_piece(u, v),
            CliqueTerm::Asoc(a) => a.mask(u, v),
        }
    }
}

/// Parameters a family was built for: entry cap `α`, per-term weight floor
/// `β`, scale cap `γ`, and term count `m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FamilyParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub m: usize,
}

/// A list of `(weight, indicator)` terms standing for the implicit
/// edge-weight vector `Σ_i w_i · term_i`.
#[derive(Debug, Clone)]
pub struct ScaledCliqueFamily {
    n: usize,
    terms: Vec<(f64, CliqueTerm)>,
    params: FamilyParams,
}

impl ScaledCliqueFamily {
    /// Builds a family, validating weights and ambient sizes.
    ///
    /// # Errors
    ///
    /// [`GridError::BadParameter`] on negative/non-finite weights or
    /// mismatched ambient sizes.
    pub fn new(
        n: usize,
        terms: Vec<(f64, CliqueTerm)>,
        params: FamilyParams,
    ) -> Result<Self, GridError> {
        for (i, (w, term)) in terms.iter().enumerate() {
            if !w.is_finite() || *w < 0.0 {
                return Err(GridError::BadParameter {
                    what: format!("term {i} has invalid weight {w}"),
                });
            }
            if term.n() != n {
                return Err(GridError::BadParameter {
                    what: format!("term {i} has ambient {} != {n}", term.n()),
                });
            }
        }
        Ok(Self { n, terms, params })
    }

    /// Ambient size `n`.
    pub fn n(&self) -> usize {
        self.n
    }

    /// The `(weight, indicator)` terms.
    pub fn terms(&self) -> &[(f64, CliqueTerm)] {
        &self.terms
    }

    /// Number of terms.
    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    /// The parameters the family was built for.
    pub fn params(&self) -> FamilyParams {
        self.params
    }

    /// Total weight the family puts on the pair `(u, v)`.
    pub fn pair_weight(&self, u: usize, v: usize) -> f64 {
        self.terms
            .iter()
            .filter(|(_, t)| t.contains(u, v))
            .map(|(w, _)| w)
            .sum()
    }

    /// Dense weight matrix of a single term (symmetric, zero diagonal).
    pub fn term_dense(&self, idx: usize, cap: usize) -> Result<DMatrix<f64>, GridError> {
        if self.n > cap {
            return Err(GridError::DenseCapExceeded { n: self.n, cap });
        }
        let (w, term) = &self.terms[idx];
        let mut out = DMatrix::zeros(self.n, self.n);
        for u in 0..self.n {
            for v in 0..u {
                if term.contains(u, v) {
                    out[(u, v)] = *w;
                    out[(v, u)] = *w;
                }
            }
        }
        Ok(out)
    }

    /// Dense weight matrix of the whole family.
    pub fn dense_total(&self, cap: usize) -> Result<DMatrix<f64>, GridError> {
        if self.n > cap {
            return Err(GridError::DenseCapExceeded { n: self.n, cap });
        }
        let mut out = DMatrix::zeros(self.n, self.n);
        for u in 0..self.n {
            for v in 0..u {
                let w = self.pair_weight(u, v);
                out[(u, v)] = w;
                out[(v, u)] = w;
            }
        }
        Ok(out)
    }

    /// Collapses a family of same-piece terms into one [`SocRep`]; `None`
    /// when any term is a cross-piece mask.
    pub fn as_soc_rep(&self) -> Option<SocRep> {
        let mut terms = Vec::with_capacity(self.terms.len());
        for (w, term) in &self.terms {
            match term {
                CliqueTerm::Soc(p) => terms.push((*w, p.clone())),
                CliqueTerm::Asoc(_) => return None,
            }
        }
        Some(SocRep::new(self.n, terms).expect("validated at construction"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pair_weight_sums_over_terms() {
        let p1 = Partition::full(3);
        let p2 = Partition::new(3, vec![vec![0], vec![1, 2]]).unwrap();
        let fam = ScaledCliqueFamily::new(
            3,
            vec![(2.0, CliqueTerm::Soc(p1)), (0.5, CliqueTerm::Soc(p2))],
            FamilyParams { alpha: 2.5, beta: 0.5, gamma: 1.0, m: 2 },
        )
        .unwrap();
        assert_eq!(fam.pair_weight(0, 1), 2.0);
        assert_eq!(fam.pair_weight(1, 2), 2.5);
        let dense = fam.dense_total(10).unwrap();
        assert_eq!(dense[(2, 1)], 2.5);
        assert!(fam.as_soc_rep().is_some());
    }

    #[test]
    fn asoc_terms_block_soc_collapse() {
        let a = AsocRep::new(Partition::new(3, vec![vec![0], vec![1]]).unwrap());
        let fam = ScaledCliqueFamily::new(
            3,
            vec![(1.0, CliqueTerm::Asoc(a))],
            FamilyParams { alpha: 1.0, beta: 1.0, gamma: 1.0, m: 1 },
        )
        .unwrap();
        assert!(fam.as_soc_rep().is_none());
        // Mask covers exactly the cross pair (0, 1); vertex 2 is outside.
        assert_eq!(fam.pair_weight(0, 1), 1.0);
        assert_eq!(fam.pair_weight(0, 2), 0.0);
    }

    #[test]
    fn rejects_negative_weights() {
        let p = Partition::full(2);
        assert!(ScaledCliqueFamily::new(
            2,
            vec![(-1.0, CliqueTerm::Soc(p))],
            FamilyParams { alpha: 1.0, beta: 1.0, gamma: 1.0, m: 1 },
        )
        .is_err());
    }
}
