//! Property tests for partition refinement and the balanced split.

use proptest::prelude::*;
use soc::{balanced_split, mutual_refinement, Partition};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    /// When every piece obeys the one-third guard, the returned prefix mass
    /// lands in the middle band: Z ≤ 3·Σ_{i ∈ split} size_i ≤ 2Z.
    #[test]
    fn balanced_split_band(sizes in prop::collection::vec(1usize..40, 2..12)) {
        let total: usize = sizes.iter().sum();
        if sizes.iter().any(|&s| 3 * s > total) {
            prop_assert!(balanced_split(&sizes).is_err());
        } else {
            let chosen = balanced_split(&sizes).unwrap();
            prop_assert!(!chosen.is_empty());
            prop_assert!(chosen.len() < sizes.len());
            let sum: usize = chosen.iter().map(|&i| sizes[i]).sum();
            prop_assert!(3 * sum >= total, "sum {sum} below band for total {total}");
            prop_assert!(3 * sum <= 2 * total, "sum {sum} above band for total {total}");
        }
    }

    /// Refining a partition with itself returns the partition restricted to
    /// its own support.
    #[test]
    fn refinement_self_identity(membership in prop::collection::vec(0usize..4, 1..30)) {
        prop_assume!(membership.iter().any(|&m| m > 0));
        let p = Partition::from_membership(membership).unwrap();
        let r = mutual_refinement(&p, &p);
        let mut lhs: Vec<Vec<usize>> = p.pieces().to_vec();
        let mut rhs: Vec<Vec<usize>> = r.pieces().to_vec();
        for piece in lhs.iter_mut().chain(rhs.iter_mut()) {
            piece.sort_unstable();
        }
        lhs.sort();
        rhs.sort();
        prop_assert_eq!(lhs, rhs);
    }

    /// Refinement is symmetric in its arguments.
    #[test]
    fn refinement_symmetric(
        ma in prop::collection::vec(0usize..4, 20),
        mb in prop::collection::vec(0usize..4, 20),
    ) {
        prop_assume!(ma.iter().zip(&mb).any(|(&x, &y)| x > 0 && y > 0));
        let pa = Partition::from_membership(ma).unwrap();
        let pb = Partition::from_membership(mb).unwrap();
        let r1 = mutual_refinement(&pa, &pb);
        let r2 = mutual_refinement(&pb, &pa);
        let norm = |p: &Partition| {
            let mut v: Vec<Vec<usize>> = p.pieces().to_vec();
            for piece in v.iter_mut() {
                piece.sort_unstable();
            }
            v.sort();
            v
        };
        prop_assert_eq!(norm(&r1), norm(&r2));
    }
}
