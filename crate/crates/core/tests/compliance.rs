use smatv_core::compliance::{catalog_isolation_shortfalls, check_isolation, check_overload, ViolationKind};
use smatv_core::model::{
    CatalogBase, ChannelPlan, ComponentNode, Network, NodeKind, OutputKind, OutputNode, PortRef, SourceLine,
    SourceNode, Spectrum,
};
use smatv_core::{builtin_catalog, propagate, Band, Cnr, Scenario, SignalLine};

/// Flat TERR source -> amplifier rated at 0 dBm -> TV outlet.
fn rated_chain(channels: usize) -> Network {
    let mut net = Network::new(CatalogBase::Builtin);
    let mut amp = net.catalog.components["LA-30"].clone();
    amp.id = "AMP-0DBM".into();
    amp.max_output_power_dbm = Some(0.0);
    net.catalog.components.insert(amp.id.clone(), amp);
    net.add_node(
        "src",
        NodeKind::Source(SourceNode {
            lines: [(SignalLine::Terr, SourceLine { spectrum: Spectrum::flat(Band::Terrestrial, 70.0), cnr_db: Cnr::Db(50.0) })]
                .into(),
            channel_plan: ChannelPlan::evenly_spaced(SignalLine::Terr, 474.0, 8.0, channels, 8.0),
        }),
    );
    net.add_node("amp", NodeKind::Component(ComponentNode { component: "AMP-0DBM".into(), regulators: Default::default() }));
    net.add_node("tv", NodeKind::Output(OutputNode { port_kind: OutputKind::Tv, floor: None, apartment: None }));
    net.add_edge("a", PortRef::new("src", "out"), PortRef::new("amp", "in"), "trunk", 5.0, [SignalLine::Terr]);
    net.add_edge("b", PortRef::new("amp", "out"), PortRef::new("tv", "in"), "drop", 5.0, [SignalLine::Terr]);
    net
}

/// Trims the source so the amplifier's highest output level is exactly `target`.
fn driven_to(net: &Network, target: f64) -> Scenario {
    let probe = propagate(net, &Scenario::default()).unwrap();
    let peak = probe.trace(&PortRef::new("amp", "out"), SignalLine::Terr).unwrap().max_level();
    let mut sc = Scenario::default();
    sc.set_trim("src", SignalLine::Terr, target - peak);
    sc
}

#[test]
fn overload_depends_on_channel_count() {
    // 0 dBm is about 108.75 dBuV for one carrier; 30 carriers allow about 93.98, two about 105.74.
    let many = rated_chain(30);
    let sc = driven_to(&many, 105.0);
    let flagged = check_overload(&many, &propagate(&many, &sc).unwrap());
    assert_eq!(flagged.len(), 1, "{flagged:?}");
    let v = &flagged[0];
    assert_eq!((v.kind, v.node.as_str(), v.port.as_deref()), (ViolationKind::Overload, "amp", Some("out")));
    assert!((v.measured.unwrap() - 105.0).abs() < 1e-9);
    assert!((v.limit - 93.979).abs() < 1e-3);

    let few = rated_chain(2);
    let sc = driven_to(&few, 105.0);
    assert!(check_overload(&few, &propagate(&few, &sc).unwrap()).is_empty());
}

#[test]
fn unrated_components_are_never_flagged() {
    let mut net = rated_chain(30);
    net.catalog.components.get_mut("AMP-0DBM").unwrap().max_output_power_dbm = None;
    let sc = driven_to(&net, 130.0);
    assert!(check_overload(&net, &propagate(&net, &sc).unwrap()).is_empty());
}

#[test]
fn strict_isolation_flags_weaker_parts() {
    let cat = builtin_catalog();
    let relaxed = catalog_isolation_shortfalls(&cat, 20.0);
    let strict = catalog_isolation_shortfalls(&cat, 40.0);
    assert!(relaxed.len() <= strict.len());
    assert!(strict.iter().all(|(_, iso)| *iso < 40.0));
    for (id, _) in &relaxed {
        assert!(strict.iter().any(|(s, _)| s == id));
    }
}

#[test]
fn isolation_check_only_touches_placed_parts() {
    let net = rated_chain(4);
    assert!(check_isolation(&net).is_empty());
}
