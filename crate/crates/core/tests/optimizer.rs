use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use smatv_core::compliance::evaluate;
use smatv_core::model::{
    line_path, CatalogBase, ChannelPlan, ComponentNode, Hop, Network, NodeKind, OutputKind, OutputNode, PortRef,
    SourceLine, SourceNode, Spectrum,
};
use smatv_core::optimize::{optimize_gains, sensitivity, Knob, OptimizeError, SearchMethod};
use smatv_core::scenario::{regulators, RegulatorRef};
use smatv_core::{propagate, Band, Cnr, Scenario, SignalLine};
use smatv_testkit::{brute_force_best, oracle_levels, random_instance, random_tree, GenConfig};

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, failure_persistence: None, ..ProptestConfig::default() }
}

/// 80 dBuV flat TERR source -> 10 m drop -> ATT-20 -> 5 m drop -> TV outlet.
fn toy(window: (f64, f64)) -> Network {
    let mut net = Network::new(CatalogBase::Builtin);
    net.add_node(
        "src",
        NodeKind::Source(SourceNode {
            lines: [(SignalLine::Terr, SourceLine { spectrum: Spectrum::flat(Band::Terrestrial, 80.0), cnr_db: Cnr::Unconstrained })]
                .into(),
            channel_plan: ChannelPlan::evenly_spaced(SignalLine::Terr, 474.0, 8.0, 4, 8.0),
        }),
    );
    net.add_node("att", NodeKind::Component(ComponentNode { component: "ATT-20".into(), regulators: Default::default() }));
    net.add_node("tv", NodeKind::Output(OutputNode { port_kind: OutputKind::Tv, floor: None, apartment: None }));
    net.add_edge("a", PortRef::new("src", "out"), PortRef::new("att", "in"), "drop", 10.0, [SignalLine::Terr]);
    net.add_edge("b", PortRef::new("att", "out"), PortRef::new("tv", "in"), "drop", 5.0, [SignalLine::Terr]);
    let terr = net.constraints.band_mut(Band::Terrestrial);
    (terr.level_min_dbuv, terr.level_max_dbuv) = window;
    net
}

proptest! {
    #![proptest_config(config(50))]

    #[test]
    fn exhaustive_search_finds_the_brute_force_optimum(seed in any::<u64>()) {
        let (net, start) = random_instance(seed, 256);
        let result = optimize_gains(&net, &start, 1_000_000, seed).unwrap();
        prop_assert_eq!(result.method, SearchMethod::Exhaustive);
        prop_assert_eq!(result.outputs_within, brute_force_best(&net, &start));
        let check = evaluate(&net, &propagate(&net, &result.scenario).unwrap());
        prop_assert_eq!(check.outputs_within, result.outputs_within);
    }
}

proptest! {
    #![proptest_config(config(20))]

    #[test]
    fn descent_never_loses_ground(seed in any::<u64>()) {
        let (net, start) = random_instance(seed, 4096);
        let result = optimize_gains(&net, &start, 40, seed).unwrap();
        let before = evaluate(&net, &propagate(&net, &start).unwrap()).outputs_within;
        prop_assert_eq!(result.start_outputs_within, before);
        prop_assert!(result.outputs_within >= before);
        prop_assert!(result.evaluations <= 40);
        if result.outputs_within == before {
            prop_assert_eq!(&result.scenario, &start);
        }
    }

    #[test]
    fn regulator_steps_match_resimulation(seed in any::<u64>(), pick in any::<prop::sample::Index>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (net, sc) = random_tree(&mut rng, &GenConfig { max_outputs: 10, max_components: 6, ..GenConfig::default() });
        let base = propagate(&net, &sc).unwrap();
        let targets: Vec<(String, SignalLine)> = base
            .outputs
            .iter()
            .flat_map(|(id, o)| o.lines.keys().map(move |l| (id.clone(), *l)))
            .collect();
        prop_assume!(!targets.is_empty());
        let (output, line) = pick.get(&targets).clone();
        let path = line_path(&net, &output, line).unwrap();
        let before = &base.output_trace(&output, line).unwrap().levels_dbuv;

        for effect in sensitivity(&net, &sc, &output, line).unwrap() {
            let mut moved = sc.clone();
            let expected = match &effect.knob {
                Knob::Regulator { node, group } => {
                    let on_path = path.iter().any(|h| matches!(h, Hop::Component { node: n, .. } if n == node));
                    prop_assert!(on_path);
                    let i = effect.index.unwrap();
                    let r = RegulatorRef { node: node.clone(), group: group.clone() };
                    match (effect.step_up_db, effect.step_down_db) {
                        (Some(up), _) => { moved.set_regulator(&r, i + 1); up }
                        (None, Some(down)) => { moved.set_regulator(&r, i - 1); down }
                        (None, None) => continue,
                    }
                }
                Knob::SourceTrim { node, line } => {
                    let on_path = path.iter().any(|h| matches!(h, Hop::Source { node: n, .. } if n == node));
                    prop_assert!(on_path);
                    prop_assert_eq!(effect.step_up_db, Some(1.0));
                    moved.set_trim(node, *line, sc.trim(node, *line) + 1.0);
                    1.0
                }
            };
            let after = propagate(&net, &moved).unwrap();
            for (x, y) in before.iter().zip(&after.output_trace(&output, line).unwrap().levels_dbuv) {
                prop_assert!((y - x - expected).abs() <= 1e-9);
            }
        }
    }
}

#[test]
fn descent_is_deterministic_per_seed() {
    let (net, start) = random_instance(11, 1 << 16);
    let a = optimize_gains(&net, &start, 200, 3).unwrap();
    let b = optimize_gains(&net, &start, 200, 3).unwrap();
    assert_eq!(a, b);
}

#[test]
fn single_attenuator_picks_the_widest_margin() {
    let net = toy((57.0, 62.0));
    let spec = &net.catalog.components["ATT-20"].regulators["att"];
    let r = RegulatorRef { node: "att".into(), group: "att".into() };
    // 0 dB leaves the outlet far above the window
    let top = spec.positions_db.iter().position(|p| *p == 0.0).unwrap();
    let mut start = Scenario::default();
    start.set_regulator(&r, top);
    let result = optimize_gains(&net, &start, 1000, 0).unwrap();
    assert_eq!(result.method, SearchMethod::Exhaustive);
    assert_eq!((result.start_outputs_within, result.outputs_within), (0, 1));

    // Independent pick: best level margin over all positions, lowest index on ties.
    let mut best: Option<(usize, f64)> = None;
    for i in 0..spec.len() {
        let mut s = Scenario::default();
        s.set_regulator(&r, i);
        let levels = oracle_levels(&net, &s, "tv", SignalLine::Terr).unwrap();
        let margin = levels.iter().map(|l| (l - 57.0).min(62.0 - l)).fold(f64::INFINITY, f64::min);
        if margin >= 0.0 && best.is_none_or(|(_, m)| margin > m) {
            best = Some((i, margin));
        }
    }
    let (index, margin) = best.expect("some position fits the window");
    assert_eq!(result.indices, vec![index]);
    assert!((result.total_margin_db - margin).abs() < 1e-9);
}

#[test]
fn compliant_start_is_returned_unchanged() {
    let net = toy((0.0, 200.0));
    let mut start = Scenario::default();
    start.set_regulator(&RegulatorRef { node: "att".into(), group: "att".into() }, 3);
    let result = optimize_gains(&net, &start, 1000, 0).unwrap();
    assert_eq!(result.outputs_within, 1);
    assert_eq!(result.scenario, start);
    assert_eq!(result.indices, vec![3]);
}

#[test]
fn network_without_regulators_is_refused() {
    let mut net = toy((57.0, 80.0));
    net.nodes.remove("att");
    net.edges.clear();
    net.add_edge("a", PortRef::new("src", "out"), PortRef::new("tv", "in"), "drop", 10.0, [SignalLine::Terr]);
    assert!(regulators(&net).is_empty());
    assert!(matches!(optimize_gains(&net, &Scenario::default(), 10, 0), Err(OptimizeError::NoRegulators)));
}

#[test]
fn zero_budget_is_refused() {
    let net = toy((57.0, 80.0));
    assert!(matches!(optimize_gains(&net, &Scenario::default(), 0, 0), Err(OptimizeError::ZeroBudget)));
}
