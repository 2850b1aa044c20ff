use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use smatv_core::compliance::{check_outputs, evaluate, score_outputs};
use smatv_core::engine::{cascade_cnr, combine_cnr};
use smatv_core::model::{line_path, Hop, Network};
use smatv_core::{propagate, Cnr, Scenario, SignalLine};
use smatv_testkit::{random_tree, splice, GenConfig};

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, failure_persistence: None, ..ProptestConfig::default() }
}

fn small_tree(seed: u64) -> (Network, Scenario) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cfg = GenConfig { max_outputs: 10, max_components: 6, ..GenConfig::default() };
    random_tree(&mut rng, &cfg)
}

proptest! {
    #![proptest_config(config(1000))]

    #[test]
    fn attenuator_insertion_shifts_downstream_levels(seed in any::<u64>(), pick in any::<prop::sample::Index>(), index in 0usize..21, u in 0.0f64..1.0) {
        let (net, sc) = small_tree(seed);
        let ids: Vec<String> = net.edges.keys().cloned().collect();
        let edge = pick.get(&ids).clone();
        let with = splice(&net, &edge, "probe", "ATT-20", u);
        let mut sc2 = sc.clone();
        sc2.regulators.entry("probe".into()).or_default().insert("att".into(), index);
        let offset = with.catalog.components["ATT-20"].regulators["att"].positions_db[index];

        let before = propagate(&net, &sc).unwrap();
        let after = propagate(&with, &sc2).unwrap();
        for (id, _) in net.outputs() {
            for line in SignalLine::ALL {
                let (Some(b), Some(a)) = (before.output_trace(id, line), after.output_trace(id, line)) else {
                    prop_assert_eq!(before.output_trace(id, line).is_some(), after.output_trace(id, line).is_some());
                    continue;
                };
                let downstream = line_path(&net, id, line).unwrap().contains(&Hop::Edge { edge: edge.clone() });
                let expected = if downstream { offset } else { 0.0 };
                for (x, y) in b.levels_dbuv.iter().zip(&a.levels_dbuv) {
                    prop_assert!((y - x - expected).abs() <= 1e-9, "{} {}: {} -> {}", id, line, x, y);
                }
            }
        }
    }

    #[test]
    fn appending_a_stage_never_raises_cnr(seed in any::<u64>(), pick in any::<prop::sample::Index>(), u in 0.0f64..1.0) {
        let (net, sc) = small_tree(seed);
        let outputs: Vec<String> = net.outputs().map(|(id, _)| id.clone()).collect();
        prop_assume!(!outputs.is_empty());
        let output = pick.get(&outputs).clone();
        let edge = net.inbound(&output).next().unwrap().id.clone();
        let with = splice(&net, &edge, "probe", "LA-30", u);

        let before = propagate(&net, &sc).unwrap();
        let after = propagate(&with, &sc).unwrap();
        for line in SignalLine::ALL {
            let (Some(b), Some(a)) = (before.output_trace(&output, line), after.output_trace(&output, line)) else { continue };
            for (x, y) in b.cnr_db.iter().zip(&a.cnr_db) {
                prop_assert!(y.noise_ratio() >= x.noise_ratio() * (1.0 - 1e-12), "{:?} -> {:?}", x, y);
                prop_assert!(y.db().is_some());
            }
        }
    }

    #[test]
    fn more_amplifiers_lower_cascade_cnr(cn in 5.0f64..40.0, n in 1u32..50, u in 60.0f64..110.0, k in 0.0f64..40.0, f in 0.0f64..12.0) {
        let fewer = cascade_cnr(Cnr::Db(cn), n, u, k, f).db().unwrap();
        let more = cascade_cnr(Cnr::Db(cn), n + 1, u, k, f).db().unwrap();
        prop_assert!(more <= fewer);
        prop_assert!(fewer <= cn);
    }

    #[test]
    fn extra_contribution_never_raises_combined_cnr(dbs in prop::collection::vec(-10.0f64..80.0, 0..8), extra in -10.0f64..80.0) {
        let parts: Vec<Cnr> = dbs.iter().map(|d| Cnr::Db(*d)).collect();
        let mut more = parts.clone();
        more.push(Cnr::Db(extra));
        prop_assert!(combine_cnr(&more).noise_ratio() >= combine_cnr(&parts).noise_ratio());
    }
}

proptest! {
    #![proptest_config(config(256))]

    #[test]
    fn combine_is_order_independent(dbs in prop::collection::vec(prop_oneof![(-10.0f64..80.0).prop_map(Cnr::Db), Just(Cnr::Unconstrained)], 0..12)
        .prop_flat_map(|v| (Just(v.clone()), Just(v).prop_shuffle()))) {
        let (original, shuffled) = dbs;
        let a = combine_cnr(&original);
        let b = combine_cnr(&shuffled);
        match (a.db(), b.db()) {
            (Some(x), Some(y)) => prop_assert!((x - y).abs() <= 1e-9),
            (None, None) => {}
            _ => prop_assert!(false, "{:?} vs {:?}", a, b),
        }
    }

    #[test]
    fn counts_always_add_up(seed in any::<u64>(), lo in 30.0f64..70.0, width in 0.0f64..40.0, floor in 0.0f64..60.0) {
        let (mut net, sc) = small_tree(seed);
        for band in smatv_core::Band::ALL {
            let l = net.constraints.band_mut(band);
            l.level_min_dbuv = lo;
            l.level_max_dbuv = lo + width;
            l.min_cnr_db = floor;
        }
        let result = propagate(&net, &sc).unwrap();
        let report = evaluate(&net, &result);
        prop_assert_eq!(report.outputs_within + report.outputs_outside, net.outputs().count());
        let quick = score_outputs(&result, &net.constraints);
        prop_assert_eq!((quick.outputs_within, quick.outputs_outside), (report.outputs_within, report.outputs_outside));
        prop_assert!((quick.total_margin_db - report.total_margin_db).abs() <= 1e-9);
        prop_assert_eq!(report.outputs.len(), net.outputs().count());
        for o in &report.outputs {
            prop_assert_eq!(o.pass, o.violations.is_empty());
            for v in &o.violations {
                if let Some(m) = v.measured {
                    match v.kind {
                        smatv_core::compliance::ViolationKind::LevelHigh => prop_assert!(m > v.limit),
                        _ => prop_assert!(m < v.limit),
                    }
                }
            }
        }
    }

    #[test]
    fn tightening_never_turns_fail_into_pass(seed in any::<u64>(), shrink_lo in 0.0f64..5.0, shrink_hi in 0.0f64..5.0, raise in 0.0f64..5.0) {
        let (net, sc) = small_tree(seed);
        let result = propagate(&net, &sc).unwrap();
        let loose = check_outputs(&result, &net.constraints);
        let mut tight = net.constraints;
        for band in smatv_core::Band::ALL {
            let l = tight.band_mut(band);
            l.level_min_dbuv += shrink_lo;
            l.level_max_dbuv -= shrink_hi;
            l.min_cnr_db += raise;
        }
        let strict = check_outputs(&result, &tight);
        for (a, b) in loose.outputs.iter().zip(&strict.outputs) {
            prop_assert_eq!(&a.output, &b.output);
            prop_assert!(a.pass || !b.pass, "{} passed only under tighter limits", a.output);
        }
        prop_assert!(strict.outputs_within <= loose.outputs_within);
    }

    #[test]
    fn propagation_is_deterministic(seed in any::<u64>()) {
        let (net, sc) = small_tree(seed);
        let a = propagate(&net, &sc).unwrap();
        let b = propagate(&net.clone(), &sc.clone()).unwrap();
        prop_assert_eq!(a, b);
    }
}
