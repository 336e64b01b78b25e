//! Partitions of vertex subsets and their mutual refinement.

use crate::SocError;

/// A partition of a subset `S ⊆ [n]` into disjoint nonempty pieces.
///
/// `membership[v] = 0` means `v ∉ S`; `membership[v] = k ≥ 1` places `v` in
/// `pieces[k-1]`. Pieces store their vertices in increasing order, so equal
/// partitions have equal representations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    n: usize,
    pieces: Vec<Vec<usize>>,
    membership: Vec<usize>,
}

impl Partition {
    /// Builds a partition from explicit pieces.
    ///
    /// # Errors
    ///
    /// [`SocError::InvalidPartition`] when pieces overlap, contain
    /// out-of-range vertices, or are empty.
    pub fn new(n: usize, pieces: Vec<Vec<usize>>) -> Result<Self, SocError> {
        let mut membership = vec![0usize; n];
        let mut sorted_pieces = Vec::with_capacity(pieces.len());
        for (k, mut piece) in pieces.into_iter().enumerate() {
            if piece.is_empty() {
                return Err(SocError::InvalidPartition {
                    reason: format!("piece {k} is empty"),
                });
            }
            piece.sort_unstable();
            for &v in &piece {
                if v >= n {
                    return Err(SocError::InvalidPartition {
                        reason: format!("vertex {v} out of range n = {n}"),
                    });
                }
                if membership[v] != 0 {
                    return Err(SocError::InvalidPartition {
                        reason: format!("vertex {v} appears in two pieces"),
                    });
                }
                membership[v] = k + 1;
            }
            sorted_pieces.push(piece);
        }
        Ok(Self {
            n,
            pieces: sorted_pieces,
            membership,
        })
    }

    /// The trivial partition: a single piece holding all of `[n]`.
    pub fn full(n: usize) -> Self {
        Self::new(n, vec![(0..n).collect()]).expect("full partition is always valid")
    }

    /// A partition with the given support as one piece.
    pub fn single_piece(n: usize, support: Vec<usize>) -> Result<Self, SocError> {
        Self::new(n, vec![support])
    }

    /// Builds directly from a membership array (`0` = outside the support).
    pub fn from_membership(membership: Vec<usize>) -> Result<Self, SocError> {
        let n = membership.len();
        let max_id = membership.iter().cloned().max().unwrap_or(0);
        let mut pieces: Vec<Vec<usize>> = vec![Vec::new(); max_id];
        for (v, &id) in membership.iter().enumerate() {
            if id > 0 {
                pieces[id - 1].push(v);
            }
        }
        pieces.retain(|p| !p.is_empty());
        Self::new(n, pieces)
    }

    /// Ambient size `n`.
    pub fn n(&self) -> usize {
        self.n
    }

    /// The pieces, each sorted increasingly.
    pub fn pieces(&self) -> &[Vec<usize>] {
        &self.pieces
    }

    /// Support `S` (all vertices covered by some piece), sorted.
    pub fn support(&self) -> Vec<usize> {
        let mut s: Vec<usize> = (0..self.n).filter(|&v| self.membership[v] != 0).collect();
        s.sort_unstable();
        s
    }

    /// Size of the support.
    pub fn support_len(&self) -> usize {
        self.membership.iter().filter(|&&m| m != 0).count()
    }

    /// 1-based piece id of `v`, or 0 when `v` is outside the support.
    pub fn piece_id(&self, v: usize) -> usize {
        self.membership[v]
    }

    /// Whether `u` and `v` lie in the same piece (both must be in the
    /// support).
    pub fn same_piece(&self, u: usize, v: usize) -> bool {
        self.membership[u] != 0 && self.membership[u] == self.membership[v]
    }

    /// Number of unordered same-piece pairs, `Σ_pieces |S|(|S|−1)/2`.
    pub fn same_piece_pairs(&self) -> u128 {
        self.pieces
            .iter()
            .map(|p| (p.len() as u128) * (p.len() as u128 - 1) / 2)
            .sum()
    }
}

/// Mutual refinement: the partition whose pieces are all nonempty
/// intersections of a piece of `p` with a piece of `a`.
///
/// The support of the result is the intersection of the supports. Runs in
/// `O(n log n)` by sorting the (piece-in-`p`, piece-in-`a`) id pairs — the
/// deterministic alternative to hashing, chosen for reproducibility.
pub fn mutual_refinement(p: &Partition, a: &Partition) -> Partition {
    assert_eq!(p.n(), a.n(), "partitions must share the ambient [n]");
    let n = p.n();
    // 1. Collect (id_p, id_a, v) for vertices in both supports.
    let mut keyed: Vec<(usize, usize, usize)> = (0..n)
        .filter_map(|v| {
            let ip = p.piece_id(v);
            let ia = a.piece_id(v);
            (ip != 0 && ia != 0).then_some((ip, ia, v))
        })
        .collect();
    // 2. Lexicographic sort groups equal id pairs into contiguous runs.
    keyed.sort_unstable();
    // 3. Emit one piece per run.
    let mut pieces: Vec<Vec<usize>> = Vec::new();
    let mut current_key = (0usize, 0usize);
    for (ip, ia, v) in keyed {
        if (ip, ia) != current_key {
            pieces.push(Vec::new());
            current_key = (ip, ia);
        }
        pieces.last_mut().expect("run started").push(v);
    }
    Partition::new(n, pieces).expect("refinement pieces are disjoint by construction")
}
