mod common;

use proptest::prelude::*;
use common::check_step;
use rgjk::simplex::distance_subalgorithm;

#[test]
fn random_simplexes_match_feature_enumeration() {
    let mut rng = common::rng(1);
    for size in 1..=4 {
        for _ in 0..20_000 {
            let s = common::gjk_simplex(&mut rng, size);
            let step = distance_subalgorithm(&s);
            if let Err(e) = check_step(&s, &step) {
                panic!("size {size}: {e}");
            }
        }
    }
}

proptest! {
    #[test]
    fn pruned_regions_agree_with_oracle(seed in any::<u64>(), size in 2usize..=4) {
        let mut rng = common::rng(seed);
        let s = common::gjk_simplex(&mut rng, size);
        let step = distance_subalgorithm(&s);
        prop_assert!(check_step(&s, &step).is_ok(), "{:?}", check_step(&s, &step));
    }
}
