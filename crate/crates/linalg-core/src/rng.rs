//! Splittable, counter-based random streams.
//!
//! Randomized algorithms in this workspace draw from ChaCha8 streams derived
//! deterministically from a root seed and a *path* of integer tags (for
//! example `(dimension, trial)`), so that
//!
//! * reruns with the same seed are bit-identical,
//! * per-dimension / per-trial streams are independent regardless of the
//!   order in which they are consumed, and
//! * parallel consumers never share mutable RNG state.
//!
//! Mixing uses SplitMix64, whose output is a bijection of its state and
//! diffuses single-bit differences across the word.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer: one round of the standard constants.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A deterministic seed node in a tree of random streams.
///
/// `SplitSeed` is cheap to copy; deriving a child never mutates the parent,
/// so the same path always yields the same stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitSeed(u64);

impl SplitSeed {
    /// Root seed node.
    pub fn new(seed: u64) -> Self {
        SplitSeed(splitmix64(seed))
    }

    /// Child node for an integer tag (e.g. a trial or dimension index).
    pub fn child(self, tag: u64) -> Self {
        SplitSeed(splitmix64(self.0 ^ splitmix64(tag.wrapping_add(0xA5A5_5A5A_DEAD_BEEF))))
    }

    /// Child node for a path of tags, folded left to right.
    pub fn descend(self, path: &[u64]) -> Self {
        path.iter().fold(self, |node, &tag| node.child(tag))
    }

    /// Materializes this node as a ChaCha8 generator.
    pub fn rng(self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.0);
        // Distinct stream id decorrelates nodes that happen to collide on the
        // 64-bit seed (the stream enters the counter block separately).
        rng.set_stream(splitmix64(self.0 ^ 0x5151_5151_5151_5151).into());
        rng
    }

    /// Raw state, for embedding into reports.
    pub fn raw(self) -> u64 {
        self.0
    }
}
