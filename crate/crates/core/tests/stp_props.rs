use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use iscore::stp::{apsp_with, DistanceGraph, Edge, Node};
use iscore::Exec;
use iscore_oracles::checks;
use iscore_oracles::gen::{random_score, ScoreParams};

fn contiguous(max_objects: usize) -> ScoreParams {
    ScoreParams { max_objects, contiguous: true, bounded: false, max_relations: 5, ..Default::default() }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn floyd_warshall_matches_csp(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let score = random_score(&mut rng, &contiguous(6));
        if let Err(e) = checks::stp_against_csp(&score, true) {
            prop_assert!(false, "{e}\n{score:#?}");
        }
    }

    #[test]
    fn sequential_and_parallel_apsp_agree(
        n in 2usize..48,
        raw in prop::collection::vec((0usize..48, 0usize..48, -5i64..20), 0..160),
    ) {
        let mut nodes = vec![Node::Origin];
        nodes.extend((1..n).map(|i| Node::Event(format!("e{i}").as_str().into())));
        let edges = raw.into_iter().filter(|&(a, b, _)| a < n && b < n && a != b)
            .map(|(from, to, weight)| Edge { from, to, weight }).collect();
        let g = DistanceGraph { nodes, edges };
        let seq = apsp_with(&g, Exec::Sequential);
        let par = apsp_with(&g, Exec::Parallel);
        prop_assert_eq!(seq.is_ok(), par.is_ok());
        if let (Ok(a), Ok(b)) = (seq, par) {
            prop_assert_eq!(a, b);
        }
    }
}
