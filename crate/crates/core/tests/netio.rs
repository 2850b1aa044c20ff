use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use smatv_core::compliance::evaluate;
use smatv_core::model::DiagnosticCode;
use smatv_core::netio::{
    build_case_study, export_report, parse_catalog, parse_network, parse_report, parse_scenario, serialize_catalog,
    serialize_network, NetioError, ReportDocument, ReportFormat,
};
use smatv_core::{builtin_catalog, propagate, Band};
use smatv_testkit::{random_tree, GenConfig};

fn case_study_value() -> Value {
    let (net, sc) = build_case_study();
    serde_json::from_str(&serialize_network(&net, Some(&sc))).unwrap()
}

fn expect_schema(v: &Value) -> String {
    match parse_network(&v.to_string()) {
        Err(NetioError::Schema(msg)) => msg,
        other => panic!("expected a schema error, got {other:?}"),
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 50, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn generated_networks_round_trip(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (net, sc) = random_tree(&mut rng, &GenConfig { coarse_grid: seed % 2 == 0, ..GenConfig::default() });
        let text = serialize_network(&net, Some(&sc));
        let parsed = parse_network(&text).unwrap();
        prop_assert_eq!(&parsed.network, &net);
        prop_assert_eq!(parsed.scenario.as_ref(), Some(&sc));
        prop_assert_eq!(serialize_network(&parsed.network, parsed.scenario.as_ref()), text);
    }
}

#[test]
fn unknown_fields_are_rejected_at_every_level() {
    let mut root = case_study_value();
    root["colour"] = json!("blue");
    assert!(expect_schema(&root).contains("colour"));

    let mut node = case_study_value();
    node["nodes"][0]["colour"] = json!(1);
    assert!(expect_schema(&node).contains("colour"));

    let mut edge = case_study_value();
    edge["edges"][0]["colour"] = json!(1);
    assert!(expect_schema(&edge).contains("colour"));

    let mut scenario = case_study_value();
    scenario["scenario"]["colour"] = json!(1);
    assert!(expect_schema(&scenario).contains("colour"));
}

#[test]
fn unknown_component_names_the_node() {
    let mut v = case_study_value();
    let nodes = v["nodes"].as_array_mut().unwrap();
    let ms = nodes.iter_mut().find(|n| n["id"] == "ms_f3").unwrap();
    ms["component"] = json!("XYZ-99");
    let msg = expect_schema(&v);
    assert!(msg.contains("ms_f3") && msg.contains("XYZ-99"), "{msg}");
}

#[test]
fn unknown_cable_names_the_edge() {
    let mut v = case_study_value();
    v["edges"][0]["cable"] = json!("string");
    let msg = expect_schema(&v);
    assert!(msg.contains("string"), "{msg}");
}

#[test]
fn inverted_window_is_a_validation_error() {
    let (mut net, _) = build_case_study();
    let terr = net.constraints.band_mut(Band::Terrestrial);
    terr.level_min_dbuv = 85.0;
    terr.level_max_dbuv = 70.0;
    match parse_network(&serialize_network(&net, None)) {
        Err(NetioError::Validation(diags)) => {
            assert!(diags.iter().any(|d| d.code == DiagnosticCode::InvalidConstraint), "{diags:?}")
        }
        other => panic!("expected validation failure, got {other:?}"),
    }
}

#[test]
fn syntax_errors_carry_a_position() {
    let text = "{\n  \"format_version\": 1,\n  nodes: []\n}\n";
    match parse_network(text) {
        Err(NetioError::Syntax { line, column, .. }) => {
            assert_eq!(line, 3);
            assert!(column >= 3);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn unsupported_version_is_refused() {
    let mut v = case_study_value();
    v["format_version"] = json!(2);
    assert!(expect_schema(&v).contains("format_version"));
}

#[test]
fn scenario_with_out_of_range_index_is_refused() {
    let (net, _) = build_case_study();
    let err = parse_scenario(r#"{"regulators": {"ms_f1": {"terr": 99}}}"#, &net).unwrap_err();
    assert!(matches!(err, NetioError::Schema(_)));
    let ok = parse_scenario(r#"{"regulators": {"ms_f1": {"terr": 0}}}"#, &net).unwrap();
    assert_eq!(ok.regulators["ms_f1"]["terr"], 0);
}

#[test]
fn catalog_round_trips() {
    let cat = builtin_catalog();
    let text = serialize_catalog(&cat);
    assert_eq!(parse_catalog(&text).unwrap(), cat);
}

#[test]
fn machine_report_round_trips() {
    let (net, sc) = build_case_study();
    let report = evaluate(&net, &propagate(&net, &sc).unwrap());
    let text = export_report(&report, ReportFormat::Machine);
    match parse_report(&text).unwrap() {
        ReportDocument::Compliance { report: back, .. } => assert_eq!(back, report),
        other => panic!("{other:?}"),
    }
    let table = export_report(&report, ReportFormat::Table);
    assert!(table.contains("Number of outputs within limits:  57"));
    assert!(!table.contains("all outputs within limits"));
}

#[test]
fn clean_report_says_so() {
    let (mut net, sc) = build_case_study();
    for band in Band::ALL {
        let l = net.constraints.band_mut(band);
        l.level_min_dbuv = 0.0;
        l.level_max_dbuv = 200.0;
        l.min_cnr_db = 0.0;
    }
    net.constraints.overload_check = false;
    net.constraints.min_tap_isolation_db = 0.0;
    let report = evaluate(&net, &propagate(&net, &sc).unwrap());
    assert!(report.is_clean(), "{:?}", report.component_violations);
    assert!(export_report(&report, ReportFormat::Table).contains("all outputs within limits"));
}
