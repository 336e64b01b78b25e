//! Sum-of-cliques (SOC) and anti-sum-of-cliques (ASOC) representations of
//! implicit edge-weight vectors over `[n]`.
//!
//! A *K-SOC* is a weight vector `x ∈ R^E_{≥0}` of the form
//! `x = Σ_{j∈[K]} w_j · 1[same piece of partition P_j]`, whose Laplacian is
//! `𝓛(x) = Σ_j w_j Σ_{S ∈ P_j} L_S` with `L_S` the unit clique Laplacian on
//! `S`. An *ASOC* is the 0/1 mask `a_e = 1` iff both endpoints lie in an
//! ambient set `S` and in *different* pieces of a partition of `S` — a
//! complete multipartite indicator.
//!
//! Clique Laplacians act in linear time (`L_S u = |S|·u|_S − 1_S⟨1_S, u⟩`),
//! so `𝓛(x)·u` costs `O(nK log n)` even for masked products: the mask is
//! resolved by *mutual refinement* of each SOC partition with the ASOC
//! partition, using `𝓛(x ∘ a) = 𝓛(x ∘ 1_{K_S}) − 𝓛(x ∘ b)` with `b` the
//! same-piece (complement) mask.
//!
//! Sparsification: complete bipartite graphs admit one-shot uniform edge
//! sampling; unions of cross-piece cliques recurse through balanced splits
//! into `O(ℓ)` bipartite sparsifications.

pub mod partition;
pub mod rep;
pub mod sparse;
pub mod sparsify;

pub use partition::{mutual_refinement, Partition};
pub use rep::{
    edge_weights_dense, materialize_dense, soc_masked_matvec, AsocRep, MaskedSoc, SocRep,
    DENSE_CAP,
};
pub use sparse::SparseLaplacian;
pub use sparsify::{balanced_split, sparsify_bipartite, sparsify_clique_asoc, SparsifyConfig};

use thiserror::Error;

/// Errors raised by the clique machinery.
#[derive(Debug, Error)]
pub enum SocError {
    /// Partition pieces must be disjoint, in-range, and nonempty.
    #[error("invalid partition: {reason}")]
    InvalidPartition { reason: String },
    /// Dense materialization refused beyond the cap.
    #[error("dense cap exceeded: n = {n} > {cap}")]
    DenseCapExceeded { n: usize, cap: usize },
    /// Balanced split requires every size ≤ total/3.
    #[error("balanced split precondition violated: element {index} has size {size} > total/3 = {third}")]
    PrerequisiteViolated { index: usize, size: usize, third: f64 },
    /// Malformed sparse Laplacian input.
    #[error("invalid edge list: {reason}")]
    InvalidEdges { reason: String },
}
