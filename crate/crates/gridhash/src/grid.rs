//! Randomized grid and interval rounding primitives.

use rand::Rng;
use soc::Partition;

use crate::PointCloud;

/// Rounds a point cloud into axis-aligned boxes of side `ρ` with a uniform
/// random offset per dimension; points sharing a box form a piece.
///
/// Guarantees:
/// * same-piece pairs satisfy `‖q_u − q_v‖₂ ≤ ρ√k` (deterministic);
/// * any pair is separated with probability at most `(2√k/ρ)·‖q_u − q_v‖₂`.
///
/// Cell indices use exact `floor((q − offset)/ρ)`; boundary ties fall into
/// the lower cell, a measure-zero but deterministic rule. Grouping sorts the
/// index tuples lexicographically (`O(nk log n)`), avoiding hash-iteration
/// nondeterminism.
pub fn grid_partition<R: Rng>(points: &PointCloud, rho: f64, rng: &mut R) -> Partition {
    assert!(rho > 0.0 && rho.is_finite(), "box side must be positive");
    let (n, k) = (points.n(), points.k());
    let offsets: Vec<f64> = (0..k).map(|_| rng.random::<f64>() * rho).collect();
    let mut keyed: Vec<(Vec<i64>, usize)> = (0..n)
        .map(|i| {
            let cell: Vec<i64> = (0..k)
                .map(|j| ((points.points()[(i, j)] - offsets[j]) / rho).floor() as i64)
                .collect();
            (cell, i)
        })
        .collect();
    keyed.sort_unstable();
    let mut pieces: Vec<Vec<usize>> = Vec::new();
    let mut current: Option<&[i64]> = None;
    for (cell, i) in &keyed {
        if current != Some(cell.as_slice()) {
            pieces.push(Vec::new());
        }
        pieces.last_mut().expect("run started").push(*i);
        current = Some(cell.as_slice());
    }
    // Runs of equal keys are disjoint index sets covering [n].
    Partition::new(n, pieces).expect("grid boxes partition the points")
}

/// Rounds a 1-d value list into length-`ρ` intervals with a random offset,
/// colors them alternately, swaps the colors with probability ½, and keeps
/// the points in "black" intervals.
///
/// Returns the kept set `S` (sorted) and the partition of `S` whose pieces
/// are the occupied black intervals. Guarantees:
/// 1. a pair at distance in `[1.5ρ, 2ρ)` lands in two *different* black
///    intervals with probability at least ¼;
/// 2. a pair at distance `≤ ρ` is never split across pieces of `S`: the two
///    points share an interval or sit in adjacent ones, and adjacent
///    intervals are never both black.
pub fn interval_partition_1d<R: Rng>(
    values: &[f64],
    rho: f64,
    rng: &mut R,
) -> (Vec<usize>, Partition) {
    assert!(rho > 0.0 && rho.is_finite(), "interval length must be positive");
    let n = values.len();
    let offset = rng.random::<f64>() * rho;
    let swap = rng.random::<bool>();
    let mut keyed: Vec<(i64, usize)> = Vec::new();
    for (i, &q) in values.iter().enumerate() {
        let idx = ((q - offset) / rho).floor() as i64;
        let black = (idx.rem_euclid(2) == 0) != swap;
        if black {
            keyed.push((idx, i));
        }
    }
    keyed.sort_unstable();
    let mut kept: Vec<usize> = keyed.iter().map(|&(_, i)| i).collect();
    kept.sort_unstable();
    let mut pieces: Vec<Vec<usize>> = Vec::new();
    let mut current: Option<i64> = None;
    for (idx, i) in keyed {
        if current != Some(idx) {
            pieces.push(Vec::new());
        }
        pieces.last_mut().expect("run started").push(i);
        current = Some(idx);
    }
    let partition = Partition::new(n, pieces).expect("intervals partition the kept set");
    (kept, partition)
}
