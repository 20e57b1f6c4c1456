use btree_model::classic::ClassicTree;
use proptest::collection::btree_set;
use proptest::prelude::*;

fn key_set() -> impl Strategy<Value = Vec<u32>> {
    btree_set(1u32..50_000, 1..400).prop_map(|s| s.into_iter().collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn split_concat_round_trip_irregular_keys(
        keys in key_set(),
        pick in proptest::num::usize::ANY,
        b_pick in 0usize..5,
    ) {
        let b = [2u32, 4, 5, 16, 64][b_pick];
        let x = keys[pick % keys.len()];
        let t = ClassicTree::build_from_sorted(&keys, b).unwrap();
        t.check().unwrap();
        let parts = t.split_at(x).unwrap();
        let lower = parts.lower();
        let upper = parts.upper();
        lower.check().unwrap();
        upper.check().unwrap();
        let below: Vec<u32> = keys.iter().copied().filter(|k| *k < x).collect();
        let above: Vec<u32> = keys.iter().copied().filter(|k| *k > x).collect();
        prop_assert_eq!(lower.in_order(), below);
        prop_assert_eq!(upper.in_order(), above);
        let back = ClassicTree::concatenate(lower, x, upper).unwrap();
        back.check().unwrap();
        prop_assert_eq!(back.in_order(), keys);
    }

    #[test]
    fn rank_select_matches_sorted_order(
        keys in key_set(),
        r_seed in proptest::num::u64::ANY,
        b_pick in 0usize..5,
    ) {
        let b = [2u32, 4, 5, 16, 64][b_pick];
        let mut t = ClassicTree::build_from_sorted(&keys, b).unwrap();
        let r = 1 + r_seed % keys.len() as u64;
        let (key, cost) = t.find_by_rank(r).unwrap();
        prop_assert_eq!(key, keys[(r - 1) as usize]);
        prop_assert!(cost as f64 <= 6.0 * (1.0 + (keys.len() as f64).log2() / (b as f64).log2()));
    }
}
