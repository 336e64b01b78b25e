//! SOC and ASOC representations with fast Laplacian matvecs and dense
//! materialization oracles.

use nalgebra::{DMatrix, DVector};

use crate::partition::{mutual_refinement, Partition};
use crate::SocError;

/// Default cap for dense materialization.
pub const DENSE_CAP: usize = 500;

/// A K-sum-of-cliques weight vector: `x_e = Σ_j w_j·[e inside a piece of P_j]`.
#[derive(Debug, Clone)]
pub struct SocRep {
    n: usize,
    terms: Vec<(f64, Partition)>,
}

impl SocRep {
    /// Builds a SOC from `(weight, partition)` terms.
    ///
    /// # Errors
    ///
    /// [`SocError::InvalidPartition`] on negative weights or mismatched
    /// ambient sizes.
    pub fn new(n: usize, terms: Vec<(f64, Partition)>) -> Result<Self, SocError> {
        for (k, (w, p)) in terms.iter().enumerate() {
            if !w.is_finite() || *w < 0.0 {
                return Err(SocError::InvalidPartition {
                    reason: format!("term {k} has invalid weight {w}"),
                });
            }
            if p.n() != n {
                return Err(SocError::InvalidPartition {
                    reason: format!("term {k} has ambient {} != {n}", p.n()),
                });
            }
        }
        Ok(Self { n, terms })
    }

    /// The empty SOC (zero weight vector).
    pub fn empty(n: usize) -> Self {
        Self { n, terms: Vec::new() }
    }

    /// A single unit-weight clique on the given support.
    pub fn single_clique(n: usize, support: Vec<usize>) -> Result<Self, SocError> {
        let p = Partition::single_piece(n, support)?;
        Self::new(n, vec![(1.0, p)])
    }

    /// Ambient size `n`.
    pub fn n(&self) -> usize {
        self.n
    }

    /// The `(weight, partition)` terms.
    pub fn terms(&self) -> &[(f64, Partition)] {
        &self.terms
    }

    /// Term count `K`.
    pub fn k(&self) -> usize {
        self.terms.len()
    }

    /// Weight this SOC assigns to the pair `(u, v)`.
    pub fn pair_weight(&self, u: usize, v: usize) -> f64 {
        self.terms
            .iter()
            .filter(|(_, p)| p.same_piece(u, v))
            .map(|(w, _)| w)
            .sum()
    }

    /// Appends a term in place.
    pub fn push(&mut self, weight: f64, partition: Partition) {
        assert!(weight >= 0.0 && partition.n() == self.n);
        self.terms.push((weight, partition));
    }

    /// Multiplies every weight by `scale`.
    pub fn scale(&mut self, scale: f64) {
        assert!(scale >= 0.0, "SOC weights must stay nonnegative");
        for (w, _) in &mut self.terms {
            *w *= scale;
        }
    }

    /// Drops zero-weight terms and pieces of size one (neither contributes
    /// any pair), keeping the representation small.
    pub fn pruned(&self) -> Self {
        let mut terms = Vec::new();
        for (w, p) in &self.terms {
            if *w == 0.0 {
                continue;
            }
            let pieces: Vec<Vec<usize>> = p
                .pieces()
                .iter()
                .filter(|piece| piece.len() >= 2)
                .cloned()
                .collect();
            if pieces.is_empty() {
                continue;
            }
            let pruned = Partition::new(self.n, pieces).expect("sub-partition stays valid");
            terms.push((*w, pruned));
        }
        Self { n: self.n, terms }
    }

    /// Sum of `x_e` over all pairs: `Σ_j w_j · (same-piece pairs of P_j)`.
    pub fn total_pair_mass(&self) -> f64 {
        self.terms
            .iter()
            .map(|(w, p)| w * p.same_piece_pairs() as f64)
            .sum()
    }
}

/// An anti-sum-of-cliques mask: `a_e = 1` iff both endpoints lie in the
/// ambient support and in different pieces.
#[derive(Debug, Clone)]
pub struct AsocRep {
    partition: Partition,
}

impl AsocRep {
    /// Wraps a partition of the ambient set `S`.
    pub fn new(partition: Partition) -> Self {
        Self { partition }
    }

    /// The full mask on `[n]`: every pair is cross-piece of the singleton
    /// partition… which has no pairs inside pieces, i.e. mask ≡ 1 on `[n]`.
    pub fn complete(n: usize) -> Self {
        let pieces: Vec<Vec<usize>> = (0..n).map(|v| vec![v]).collect();
        Self {
            partition: Partition::new(n, pieces).expect("singletons are valid"),
        }
    }

    /// Ambient size `n`.
    pub fn n(&self) -> usize {
        self.partition.n()
    }

    /// The underlying partition of the ambient set.
    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    /// Mask value for the pair `(u, v)`.
    pub fn mask(&self, u: usize, v: usize) -> bool {
        let iu = self.partition.piece_id(u);
        let iv = self.partition.piece_id(v);
        iu != 0 && iv != 0 && iu != iv
    }
}

/// A weight vector of the form `x ∘ a`: a K-SOC entrywise multiplied by an
/// optional ASOC mask. This is the closed representation class the packing
/// and sparsification layers exchange — products of SOC steps against a
/// fixed masked support stay in it.
#[derive(Debug, Clone)]
pub struct MaskedSoc {
    soc: SocRep,
    mask: Option<AsocRep>,
}

impl MaskedSoc {
    /// Pairs a SOC with an optional mask of the same ambient size.
    ///
    /// # Errors
    ///
    /// [`SocError::InvalidPartition`] on ambient mismatch.
    pub fn new(soc: SocRep, mask: Option<AsocRep>) -> Result<Self, SocError> {
        if let Some(a) = &mask {
            if a.n() != soc.n() {
                return Err(SocError::InvalidPartition {
                    reason: format!("mask ambient {} != SOC ambient {}", a.n(), soc.n()),
                });
            }
        }
        Ok(Self { soc, mask })
    }

    /// Ambient size `n`.
    pub fn n(&self) -> usize {
        self.soc.n()
    }

    /// The SOC factor.
    pub fn soc(&self) -> &SocRep {
        &self.soc
    }

    /// The mask, if any.
    pub fn mask(&self) -> Option<&AsocRep> {
        self.mask.as_ref()
    }

    /// Weight of the pair `(u, v)` after masking.
    pub fn pair_weight(&self, u: usize, v: usize) -> f64 {
        let masked = self.mask.as_ref().map(|a| a.mask(u, v)).unwrap_or(true);
        if masked {
            self.soc.pair_weight(u, v)
        } else {
            0.0
        }
    }

    /// Laplacian–vector product of the masked weights.
    pub fn matvec(&self, u: &DVector<f64>) -> DVector<f64> {
        soc_masked_matvec(&self.soc, self.mask.as_ref(), u)
    }

    /// Sum of masked weights over all pairs, computed per term as
    /// `pairs(refine(P_j, S)) − pairs(refine(P_j, A))` without any dense pass.
    pub fn pair_mass(&self) -> f64 {
        match &self.mask {
            None => self.soc.total_pair_mass(),
            Some(a) => {
                let support = a.partition().support();
                if support.is_empty() {
                    return 0.0;
                }
                let ambient = Partition::single_piece(self.n(), support)
                    .expect("ambient support is a valid piece");
                self.soc
                    .terms()
                    .iter()
                    .map(|(w, p)| {
                        let kept = mutual_refinement(p, &ambient).same_piece_pairs() as f64;
                        let removed =
                            mutual_refinement(p, a.partition()).same_piece_pairs() as f64;
                        w * (kept - removed)
                    })
                    .sum()
            }
        }
    }

    /// Multiplies the SOC weights by `scale`.
    pub fn scale(&mut self, scale: f64) {
        self.soc.scale(scale);
    }

    /// Prunes the SOC factor; the mask is untouched.
    pub fn pruned(&self) -> Self {
        Self { soc: self.soc.pruned(), mask: self.mask.clone() }
    }

    /// Dense Laplacian of the masked weights (test oracle).
    ///
    /// # Errors
    ///
    /// [`SocError::DenseCapExceeded`] beyond `cap`.
    pub fn laplacian_dense(&self, cap: usize) -> Result<DMatrix<f64>, SocError> {
        materialize_dense(&self.soc, self.mask.as_ref(), cap)
    }
}

/// Clique-Laplacian action added into `out`:
/// `out += w · Σ_{pieces S} (|S|·u|_S − 1_S ⟨1_S, u⟩)`.
fn add_clique_action(out: &mut DVector<f64>, p: &Partition, w: f64, u: &DVector<f64>) {
    if w == 0.0 {
        return;
    }
    for piece in p.pieces() {
        let len = piece.len();
        if len < 2 {
            continue; // singleton cliques have zero Laplacian
        }
        let sum: f64 = piece.iter().map(|&v| u[v]).sum();
        for &v in piece {
            out[v] += w * (len as f64 * u[v] - sum);
        }
    }
}

/// Laplacian–vector product `𝓛(x ∘ a)·u` for a SOC `x` and optional ASOC
/// mask `a`, without materializing any matrix.
///
/// With no mask this is `𝓛(x)·u`. With a mask, each term resolves as
/// `𝓛(w_j·1_{P_j} ∘ a) = 𝓛(w_j·1_{refine(P_j, S)}) − 𝓛(w_j·1_{refine(P_j, A)})`:
/// restricting to the ambient set keeps pairs inside `S`, and subtracting the
/// same-piece refinement removes pairs the mask excludes. Cost `O(nK log n)`.
pub fn soc_masked_matvec(x: &SocRep, mask: Option<&AsocRep>, u: &DVector<f64>) -> DVector<f64> {
    assert_eq!(u.len(), x.n(), "vector length must match ambient size");
    let mut out = DVector::zeros(x.n());
    match mask {
        None => {
            for (w, p) in x.terms() {
                add_clique_action(&mut out, p, *w, u);
            }
        }
        Some(a) => {
            assert_eq!(a.n(), x.n(), "mask ambient size must match");
            let support = a.partition().support();
            if support.is_empty() {
                return out; // mask is identically zero
            }
            let ambient = Partition::single_piece(x.n(), support)
                .expect("ambient support is a valid piece");
            for (w, p) in x.terms() {
                // Pairs of P_j with both endpoints in S…
                let kept = mutual_refinement(p, &ambient);
                add_clique_action(&mut out, &kept, *w, u);
                // …minus pairs also sharing an ASOC piece.
                let removed = mutual_refinement(p, a.partition());
                add_clique_action(&mut out, &removed, -*w, u);
            }
        }
    }
    out
}

/// Dense symmetric matrix of masked pair weights `x_e·a_e` (zero diagonal).
///
/// # Errors
///
/// [`SocError::DenseCapExceeded`] beyond `cap`.
pub fn edge_weights_dense(
    x: &SocRep,
    mask: Option<&AsocRep>,
    cap: usize,
) -> Result<DMatrix<f64>, SocError> {
    let n = x.n();
    if n > cap {
        return Err(SocError::DenseCapExceeded { n, cap });
    }
    let mut w = DMatrix::zeros(n, n);
    for (weight, p) in x.terms() {
        if *weight == 0.0 {
            continue;
        }
        for piece in p.pieces() {
            for (idx, &a_v) in piece.iter().enumerate() {
                for &b_v in &piece[idx + 1..] {
                    let masked = mask.map(|m| m.mask(a_v, b_v)).unwrap_or(true);
                    if masked {
                        w[(a_v, b_v)] += weight;
                        w[(b_v, a_v)] += weight;
                    }
                }
            }
        }
    }
    Ok(w)
}

/// Dense Laplacian of the masked weight vector — the test oracle for the
/// matvec path.
///
/// # Errors
///
/// [`SocError::DenseCapExceeded`] beyond `cap`.
pub fn materialize_dense(
    x: &SocRep,
    mask: Option<&AsocRep>,
    cap: usize,
) -> Result<DMatrix<f64>, SocError> {
    let w = edge_weights_dense(x, mask, cap)?;
    let n = x.n();
    let mut lap = DMatrix::zeros(n, n);
    for i in 0..n {
        let mut degree = 0.0;
        for j in 0..n {
            if i != j {
                lap[(i, j)] = -w[(i, j)];
                degree += w[(i, j)];
            }
        }
        lap[(i, i)] = degree;
    }
    Ok(lap)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_clique_matvec_row() {
        // Clique {0,1,2} in n = 4, u = e_0: (Lu) = (2, −1, −1, 0).
        let x = SocRep::single_clique(4, vec![0, 1, 2]).unwrap();
        let mut u = DVector::zeros(4);
        u[0] = 1.0;
        let out = soc_masked_matvec(&x, None, &u);
        assert_eq!(out[0], 2.0);
        assert_eq!(out[1], -1.0);
        assert_eq!(out[2], -1.0);
        assert_eq!(out[3], 0.0);
    }

    #[test]
    fn masked_matvec_matches_spec_example() {
        // Clique on {0,1,2}, ASOC partition {{0,1},{2}}: surviving edges
        // (0,2), (1,2). u = e_0 → (1, 0, −1).
        let x = SocRep::single_clique(3, vec![0, 1, 2]).unwrap();
        let a = AsocRep::new(Partition::new(3, vec![vec![0, 1], vec![2]]).unwrap());
        let mut u = DVector::zeros(3);
        u[0] = 1.0;
        let out = soc_masked_matvec(&x, Some(&a), &u);
        assert_eq!(out[0], 1.0);
        assert_eq!(out[1], 0.0);
        assert_eq!(out[2], -1.0);
    }

    #[test]
    fn empty_soc_materializes_to_zero() {
        let x = SocRep::empty(5);
        let lap = materialize_dense(&x, None, DENSE_CAP).unwrap();
        assert_eq!(lap.norm(), 0.0);
    }

    #[test]
    fn full_clique_is_n_i_minus_ones() {
        let n = 6;
        let x = SocRep::single_clique(n, (0..n).collect()).unwrap();
        let lap = materialize_dense(&x, None, DENSE_CAP).unwrap();
        for i in 0..n {
            for j in 0..n {
                let want = if i == j { n as f64 - 1.0 } else { -1.0 };
                assert_eq!(lap[(i, j)], want);
            }
        }
    }

    #[test]
    fn dense_cap_enforced() {
        let x = SocRep::empty(10);
        assert!(matches!(
            materialize_dense(&x, None, 5),
            Err(SocError::DenseCapExceeded { n: 10, cap: 5 })
        ));
    }

    #[test]
    fn masked_pair_mass_matches_dense_sum() {
        // Two SOC terms against a 3-piece mask on a 6-point ambient set.
        let soc = SocRep::new(
            6,
            vec![
                (1.5, Partition::new(6, vec![vec![0, 1, 2, 3], vec![4, 5]]).unwrap()),
                (0.5, Partition::full(6)),
            ],
        )
        .unwrap();
        let mask = AsocRep::new(
            Partition::new(6, vec![vec![0, 1], vec![2, 4], vec![5]]).unwrap(),
        );
        let m = MaskedSoc::new(soc, Some(mask)).unwrap();
        let w = edge_weights_dense(m.soc(), m.mask(), DENSE_CAP).unwrap();
        let dense_sum: f64 = (0..6)
            .flat_map(|i| (i + 1..6).map(move |j| (i, j)))
            .map(|(i, j)| w[(i, j)])
            .sum();
        assert!((m.pair_mass() - dense_sum).abs() < 1e-12);
        assert_eq!(m.pair_weight(0, 2), 2.0);
        assert_eq!(m.pair_weight(0, 1), 0.0); // same mask piece
        assert_eq!(m.pair_weight(0, 3), 0.0); // 3 outside mask support
    }

    #[test]
    fn pruned_preserves_pair_weights() {
        let p = Partition::new(5, vec![vec![0, 1], vec![2]]).unwrap();
        let x = SocRep::new(5, vec![(2.0, p), (0.0, Partition::full(5))]).unwrap();
        let pruned = x.pruned();
        assert_eq!(pruned.k(), 1);
        assert_eq!(pruned.pair_weight(0, 1), 2.0);
        assert_eq!(pruned.pair_weight(0, 2), 0.0);
    }
}
