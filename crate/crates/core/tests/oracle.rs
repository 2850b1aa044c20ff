use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use smatv_core::{propagate, SignalLine};
use smatv_testkit::{oracle_levels, random_tree, GenConfig};

fn assert_matches_oracle(seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (net, sc) = random_tree(&mut rng, &GenConfig::default());
    assert!(net.outputs().count() <= 60);
    let result = propagate(&net, &sc).unwrap();
    for (id, _) in net.outputs() {
        for line in SignalLine::ALL {
            let engine = result.output_trace(id, line).map(|t| t.levels_dbuv.clone());
            let oracle = oracle_levels(&net, &sc, id, line);
            match (engine, oracle) {
                (Some(e), Some(o)) => {
                    for (a, b) in e.iter().zip(&o) {
                        assert!((a - b).abs() <= 1e-9, "seed {seed} {id} {line}: {a} vs {b}");
                    }
                }
                (None, None) => {}
                (e, o) => panic!("seed {seed} {id} {line}: engine {e:?} oracle {o:?}"),
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 100, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn levels_equal_path_sums(seed in any::<u64>()) {
        assert_matches_oracle(seed);
    }
}

#[test]
fn fixed_seeds_equal_path_sums() {
    for seed in 0..20 {
        assert_matches_oracle(seed);
    }
}
