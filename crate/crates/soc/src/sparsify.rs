//! Sparsification of complete bipartite graphs and cross-piece clique
//! unions.
//!
//! The primitive is uniform edge sampling from a complete bipartite graph
//! `L × R`: `m = ⌈C·|V|·ln(|V|/δ)⌉` samples with replacement, each carrying
//! weight `|L||R|/m`, spectrally approximate the complete bipartite
//! Laplacian within a factor `e^{±1}` with probability `≥ 1−δ`. Unions of
//! cross-piece cliques (complete multipartite graphs) reduce to at most
//! `ℓ−1` bipartite sparsifications by splitting pieces into balanced halves.

use linalg_core::SplitSeed;
use rand::Rng;

use crate::partition::Partition;
use crate::sparse::SparseLaplacian;
use crate::SocError;

/// Tunables for the sampling-based sparsifiers.
#[derive(Debug, Clone, Copy)]
pub struct SparsifyConfig {
    /// Leading constant `C` in the bipartite sample count
    /// `m = ⌈C·|V|·ln(|V|/δ)⌉`.
    pub sample_constant: f64,
}

impl Default for SparsifyConfig {
    fn default() -> Self {
        Self { sample_constant: 9.0 }
    }
}

/// Greedy balanced split of sizes into a prefix summing into `[Z/3, 2Z/3]`.
///
/// Elements are taken in the given order while the running sum is `≤ Z/3`;
/// the element that first pushes the sum past `Z/3` is included. Under the
/// precondition (no element exceeds `Z/3`) the result lies in `[Z/3, 2Z/3]`.
///
/// # Returns
///
/// Indices of the selected prefix.
///
/// # Errors
///
/// [`SocError::PrerequisiteViolated`] when some element exceeds `Z/3`
/// (callers handle that branch by splitting off the heavy element instead).
pub fn balanced_split(sizes: &[usize]) -> Result<Vec<usize>, SocError> {
    let total: usize = sizes.iter().sum();
    for (index, &size) in sizes.iter().enumerate() {
        if 3 * size > total {
            return Err(SocError::PrerequisiteViolated {
                index,
                size,
                third: total as f64 / 3.0,
            });
        }
    }
    let mut selected = Vec::new();
    let mut sum = 0usize;
    for (index, &size) in sizes.iter().enumerate() {
        selected.push(index);
        sum += size;
        if 3 * sum > total {
            break;
        }
    }
    debug_assert!(3 * sum >= total && 3 * sum <= 2 * total, "greedy split out of band");
    Ok(selected)
}

/// Sparsifies the complete unweighted bipartite graph `left × right` by
/// uniform edge sampling.
///
/// # Arguments
///
/// * `n` — ambient vertex count (edge endpoints index into `[n]`).
/// * `left`, `right` — disjoint nonempty vertex classes.
/// * `delta` — failure probability for the `e^{±1}` spectral approximation.
/// * `rng` — sampling stream.
///
/// # Returns
///
/// An edge list with at most `m` distinct edges totalling weight
/// `|L||R|` exactly.
pub fn sparsify_bipartite(
    n: usize,
    left: &[usize],
    right: &[usize],
    delta: f64,
    rng: &mut impl Rng,
    config: &SparsifyConfig,
) -> SparseLaplacian {
    assert!(!left.is_empty() && !right.is_empty(), "classes must be nonempty");
    assert!(delta > 0.0 && delta < 1.0, "delta must lie in (0,1)");
    let vertices = left.len() + right.len();
    let m = (config.sample_constant * vertices as f64 * (vertices as f64 / delta).ln())
        .ceil()
        .max(1.0) as usize;
    let weight = (left.len() * right.len()) as f64 / m as f64;
    let mut raw = Vec::with_capacity(m);
    for _ in 0..m {
        let u = left[rng.random_range(0..left.len())];
        let v = right[rng.random_range(0..right.len())];
        raw.push((u, v, weight));
    }
    SparseLaplacian::new(n, raw).expect("sampled edges are valid by construction")
}

/// Sparsifies the union of cross-piece cliques `Σ_{i<j} L_{S_i × S_j}` for a
/// partition `{S_i}` of `S`.
///
/// Recursion: while some piece holds more than a third of the remaining
/// support, peel it off with one bipartite sparsification against the rest;
/// otherwise split the pieces into two balanced groups, sparsify across,
/// and recurse into both groups. At most `ℓ−1` bipartite calls happen in
/// total, so each call runs at failure budget `δ/(ℓ−1)`.
///
/// Pieces are processed largest-first (deterministic tie-break by the
/// partition's piece order); every recursive branch draws from its own
/// seed-derived stream, so results are reproducible regardless of
/// evaluation order.
pub fn sparsify_clique_asoc(
    partition: &Partition,
    delta: f64,
    seed: SplitSeed,
    config: &SparsifyConfig,
) -> SparseLaplacian {
    let n = partition.n();
    let ell = partition.pieces().len();
    if ell <= 1 {
        return SparseLaplacian::empty(n);
    }
    let per_call_delta = delta / (ell - 1) as f64;
    // Largest piece first; ties keep the original order (stable sort).
    let mut pieces: Vec<Vec<usize>> = partition.pieces().to_vec();
    pieces.sort_by_key(|p| std::cmp::Reverse(p.len()));
    let mut out = SparseLaplacian::empty(n);
    recurse(n, &pieces, per_call_delta, seed, config, &mut out);
    out
}

fn recurse(
    n: usize,
    pieces: &[Vec<usize>],
    per_call_delta: f64,
    seed: SplitSeed,
    config: &SparsifyConfig,
    out: &mut SparseLaplacian,
) {
    if pieces.len() <= 1 {
        return;
    }
    if pieces.len() == 2 {
        let mut rng = seed.child(0).rng();
        let bip = sparsify_bipartite(n, &pieces[0], &pieces[1], per_call_delta, &mut rng, config);
        *out = out.add(&bip);
        return;
    }
    let support: usize = pieces.iter().map(Vec::len).sum();
    let sizes: Vec<usize> = pieces.iter().map(Vec::len).collect();
    // Heavy piece (> support/3): bipartite against everything else, then
    // recurse on the rest. Pieces are sorted descending, so it is first.
    if 3 * sizes[0] > support {
        let heavy = &pieces[0];
        let rest: Vec<usize> = pieces[1..].iter().flatten().cloned().collect();
        let mut rng = seed.child(0).rng();
        let bip = sparsify_bipartite(n, heavy, &rest, per_call_delta, &mut rng, config);
        *out = out.add(&bip);
        recurse(n, &pieces[1..], per_call_delta, seed.child(1), config, out);
        return;
    }
    // Balanced case: split the piece list into two groups of comparable
    // total size, sparsify across, recurse into both groups.
    let split = balanced_split(&sizes).expect("no heavy piece remains");
    let in_split: std::collections::HashSet<usize> = split.iter().cloned().collect();
    let mut group_a: Vec<Vec<usize>> = Vec::new();
    let mut group_b: Vec<Vec<usize>> = Vec::new();
    for (i, piece) in pieces.iter().enumerate() {
        if in_split.contains(&i) {
            group_a.push(piece.clone());
        } else {
            group_b.push(piece.clone());
        }
    }
    let flat_a: Vec<usize> = group_a.iter().flatten().cloned().collect();
    let flat_b: Vec<usize> = group_b.iter().flatten().cloned().collect();
    let mut rng = seed.child(0).rng();
    let bip = sparsify_bipartite(n, &flat_a, &flat_b, per_call_delta, &mut rng, config);
    *out = out.add(&bip);
    recurse(n, &group_a, per_call_delta, seed.child(1), config, out);
    recurse(n, &group_b, per_call_delta, seed.child(2), config, out);
}
