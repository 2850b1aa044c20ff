use std::collections::BTreeMap;

use serde::Deserialize;

use crate::model::{
    CatalogBase, ChannelPlan, ComponentNode, Network, NodeKind, OutputKind, OutputNode, PortRef, SourceLine,
    SourceNode, Spectrum,
};
use crate::scenario::Scenario;
use crate::units::{Cnr, SignalLine};

const TUNING_JSON: &str = include_str!("../../data/case_study.json");

pub const FLOORS: usize = 5;
pub const APARTMENTS_PER_FLOOR: usize = 4;
pub const SAT_PORTS_PER_APARTMENT: usize = 2;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PlanSpec {
    first_mhz: f64,
    spacing_mhz: f64,
    count: usize,
    bandwidth_mhz: f64,
}

impl PlanSpec {
    fn plan(&self, line: SignalLine) -> ChannelPlan {
        ChannelPlan::evenly_spaced(line, self.first_mhz, self.spacing_mhz, self.count, self.bandwidth_mhz)
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TerrestrialSpec {
    level_dbuv: f64,
    channels: PlanSpec,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SatSpec {
    level_dbuv: f64,
    cnr_db: f64,
    low_band_channels: PlanSpec,
    high_band_channels: PlanSpec,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FloorSpec {
    multiswitch: String,
    sat_drops_m: Vec<f64>,
    tv_drops_m: Vec<f64>,
    taps: Vec<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Tuning {
    #[allow(dead_code)]
    format_version: u32,
    terrestrial: TerrestrialSpec,
    sat: SatSpec,
    feed_length_m: f64,
    riser_length_m: f64,
    tap_lead_m: f64,
    tap_spacing_m: f64,
    floors: Vec<FloorSpec>,
    regulators: BTreeMap<String, usize>,
}

pub fn source_id(line: SignalLine) -> String {
    format!("src_{}", line.as_str().to_lowercase())
}

pub fn multiswitch_id(floor: usize) -> String {
    format!("ms_f{floor}")
}

pub fn sat_output_id(floor: usize, apartment: usize, port: usize) -> String {
    format!("out_f{floor}_a{apartment}_sat{port}")
}

pub fn tv_output_id(floor: usize, apartment: usize) -> String {
    format!("out_f{floor}_a{apartment}_tv")
}

/// The five-storey building: four apartments per floor, each with two SAT
/// receiver ports and one TV port, fed by a cascade of MV512 multiswitches
/// ending in an MV512T. SAT ports hang off the multiswitch subscriber outputs;
/// TV ports hang off a chain of SD5xx taps on each multiswitch's terrestrial
/// output. Cable lengths and tap values are frozen tuning data.
///
/// The returned scenario pins every regulator explicitly.
pub fn build_case_study() -> (Network, Scenario) {
    let t: Tuning = serde_json::from_str(TUNING_JSON).expect("case-study data parses");
    let mut net = Network::new(CatalogBase::Builtin);

    let terr_plan = t.terrestrial.channels.plan(SignalLine::Terr);
    net.add_node(
        source_id(SignalLine::Terr),
        NodeKind::Source(SourceNode {
            lines: [(
                SignalLine::Terr,
                SourceLine {
                    spectrum: Spectrum::flat(SignalLine::Terr.band(), t.terrestrial.level_dbuv),
                    cnr_db: Cnr::Unconstrained,
                },
            )]
            .into(),
            channel_plan: terr_plan,
        }),
    );
    for line in SignalLine::SAT {
        let plan = match line {
            SignalLine::Vl | SignalLine::Hl => t.sat.low_band_channels.plan(line),
            _ => t.sat.high_band_channels.plan(line),
        };
        net.add_node(
            source_id(line),
            NodeKind::Source(SourceNode {
                lines: [(
                    line,
                    SourceLine {
                        spectrum: Spectrum::flat(line.band(), t.sat.level_dbuv),
                        cnr_db: Cnr::Db(t.sat.cnr_db),
                    },
                )]
                .into(),
                channel_plan: plan,
            }),
        );
    }

    let mut scenario = Scenario::default();
    for line in SignalLine::ALL {
        net.add_edge(
            format!("feed_{}", line.as_str().to_lowercase()),
            PortRef::new(source_id(line), "out"),
            PortRef::new(multiswitch_id(1), "trunk_in"),
            "trunk",
            t.feed_length_m,
            [line],
        );
    }

    for (k0, floor) in t.floors.iter().enumerate() {
        let k = k0 + 1;
        let ms = multiswitch_id(k);
        net.add_node(
            &ms,
            NodeKind::Component(ComponentNode { component: floor.multiswitch.clone(), regulators: BTreeMap::new() }),
        );
        scenario.regulators.insert(ms.clone(), t.regulators.clone());
        if k > 1 {
            net.add_edge(
                format!("riser_f{k}"),
                PortRef::new(multiswitch_id(k - 1), "trunk_out"),
                PortRef::new(&ms, "trunk_in"),
                "trunk",
                t.riser_length_m,
                SignalLine::ALL,
            );
        }

        for a in 1..=APARTMENTS_PER_FLOOR {
            for s in 1..=SAT_PORTS_PER_APARTMENT {
                let sub = SAT_PORTS_PER_APARTMENT * (a - 1) + s;
                let out = sat_output_id(k, a, s);
                net.add_node(
                    &out,
                    NodeKind::Output(OutputNode {
                        port_kind: OutputKind::SatReceiver,
                        floor: Some(k as u32),
                        apartment: Some(a as u32),
                    }),
                );
                net.add_edge(
                    format!("drop_f{k}_a{a}_sat{s}"),
                    PortRef::new(&ms, format!("sub{sub}")),
                    PortRef::new(&out, "in"),
                    "drop",
                    floor.sat_drops_m[sub - 1],
                    SignalLine::ALL,
                );
            }
        }

        for (j0, tap) in floor.taps.iter().enumerate() {
            let j = j0 + 1;
            let id = format!("tap_f{k}_{j}");
            net.add_node(&id, NodeKind::Component(ComponentNode { component: tap.clone(), regulators: BTreeMap::new() }));
            let (from, name, length) = if j == 1 {
                (PortRef::new(&ms, "terr_out"), format!("lead_f{k}"), t.tap_lead_m)
            } else {
                (PortRef::new(format!("tap_f{k}_{}", j - 1), "out"), format!("chain_f{k}_{j}"), t.tap_spacing_m)
            };
            net.add_edge(name, from, PortRef::new(&id, "in"), "drop", length, [SignalLine::Terr]);

            let out = tv_output_id(k, j);
            net.add_node(
                &out,
                NodeKind::Output(OutputNode {
                    port_kind: OutputKind::Tv,
                    floor: Some(k as u32),
                    apartment: Some(j as u32),
                }),
            );
            net.add_edge(
                format!("drop_f{k}_a{j}_tv"),
                PortRef::new(&id, "tap"),
                PortRef::new(&out, "in"),
                "drop",
                floor.tv_drops_m[j0],
                [SignalLine::Terr],
            );
        }
    }
    (net, scenario)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::ComponentClass;
    use crate::model::{line_path, validate_network, Severity};

    #[test]
    fn sixty_outputs_on_five_floors() {
        let (net, sc) = build_case_study();
        assert_eq!(net.outputs().count(), FLOORS * APARTMENTS_PER_FLOOR * (SAT_PORTS_PER_APARTMENT + 1));
        assert_eq!(net.outputs().count(), 60);
        let stages: Vec<_> = (1..=FLOORS)
            .map(|k| net.catalog.components[&net.nodes[&multiswitch_id(k)].component().unwrap().component].class)
            .collect();
        assert_eq!(stages[..4], [ComponentClass::MultiswitchCascadable; 4]);
        assert_eq!(stages[4], ComponentClass::MultiswitchTerminal);
        assert!(validate_network(&net).iter().all(|d| d.severity != Severity::Error));
        sc.validate(&net).unwrap();
        assert_eq!(sc.regulators.len(), FLOORS);
    }

    #[test]
    fn every_sat_port_reaches_every_sat_line() {
        let (net, _) = build_case_study();
        for (id, o) in net.outputs() {
            if o.port_kind == OutputKind::SatReceiver {
                for line in SignalLine::SAT {
                    let path = line_path(&net, id, line).unwrap();
                    assert!(matches!(&path[0], crate::model::Hop::Source { node, .. } if *node == source_id(line)));
                }
            }
        }
    }
}
