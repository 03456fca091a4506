use proptest::prelude::*;

use rpl::perm_algebra::{join, separating_tree};
use rpl::{dual, pattern_to_perm, FiniteColoring, Pattern, Permutation, StableColoring};

fn perm_strategy(max: usize) -> impl Strategy<Value = Permutation> {
    (1..=max)
        .prop_flat_map(|n| Just((0..n).collect::<Vec<usize>>()).prop_shuffle())
        .prop_map(|v| Permutation::new(v).unwrap())
}

fn pattern_strategy(max: usize) -> impl Strategy<Value = Pattern> {
    (1..=max).prop_flat_map(|n| {
        prop::collection::vec(0u8..2, n * (n - 1) / 2).prop_map(move |bits| Pattern::new(n, bits).unwrap())
    })
}

proptest! {
    #[test]
    fn pattern_files_round_trip(p in pattern_strategy(9)) {
        prop_assert_eq!(Pattern::parse_file(&p.to_file_string()).unwrap(), p);
    }

    #[test]
    fn perm_coding_round_trips(pi in perm_strategy(9)) {
        prop_assert_eq!(pattern_to_perm(&pi.pattern()), Some(pi.clone()));
        prop_assert_eq!(pi.to_string().parse::<Permutation>().unwrap(), pi);
    }

    #[test]
    fn separating_tree_evaluates_back(pi in perm_strategy(9)) {
        if let Some(t) = separating_tree(&pi) {
            prop_assert_eq!(t.evaluate(), pi.clone());
            prop_assert_eq!(t.leaf_count(), pi.len());
        }
    }

    #[test]
    fn join_is_associative_and_dual_commutes(a in pattern_strategy(4), b in pattern_strategy(4), c in pattern_strategy(4)) {
        prop_assert_eq!(join(&join(&a, &b), &c), join(&a, &join(&b, &c)));
        prop_assert_eq!(dual(&join(&a, &b)), join(&dual(&a), &dual(&b)));
    }

    #[test]
    fn coloring_files_round_trip(n in 0usize..12, seed in any::<u64>()) {
        let f = FiniteColoring::from_fn(n, |x, y| ((seed >> ((x * 7 + y) % 64)) & 1) as u8);
        prop_assert_eq!(FiniteColoring::parse_file(&f.to_file_string()).unwrap(), f);
    }

    #[test]
    fn stable_files_round_trip(limits in prop::collection::vec(0u8..2, 1..30)) {
        let n = limits.len();
        let settle: Vec<usize> = (0..n).map(|x| (2 * x + 1).min(n).max(x + 1)).collect();
        let s = StableColoring::new(limits, settle, []).unwrap();
        prop_assert_eq!(StableColoring::parse_file(&s.to_file_string()).unwrap(), s);
    }
}
