use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use iscore_oracles::checks;
use iscore_oracles::gen::{random_score, ScoreParams};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn analysis_matches_enumeration(seed in any::<u64>(), start in 0u64..=10) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let score = random_score(&mut rng, &ScoreParams { max_objects: 4, ..Default::default() });
        let h = checks::affordable_horizon(&score, start, 5_000);
        let words: Vec<_> = (0..3).map(|_| checks::random_word(&score, &mut rng)).collect();
        if let Err(e) = checks::analysis_against_enumeration(&score, h, &words) {
            prop_assert!(false, "{e}\n{score:#?}");
        }
    }

    #[test]
    fn subset_sum_reduction(values in prop::collection::vec(1u64..=20, 1..=8), target in 1u64..=80) {
        if let Err(e) = checks::subset_sum(&values, target) {
            prop_assert!(false, "{e}");
        }
    }
}
