use std::collections::{BTreeMap, BTreeSet};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use smatv_core::catalog::{ComponentSpec, PortDirection};
use smatv_core::model::{
    CatalogBase, ChannelPlan, ComponentNode, FrequencyGrid, Network, NodeKind, OutputKind, OutputNode, PortRef,
    SourceLine, SourceNode, Spectrum, SpectrumAnchor,
};
use smatv_core::scenario::{regulators, Scenario};
use smatv_core::{propagate, Cnr, Frequency, SignalLine};

#[derive(Debug, Clone, Copy)]
pub struct GenConfig {
    pub max_outputs: usize,
    pub max_components: usize,
    /// Cap on the product of regulator position counts.
    pub max_space: Option<u64>,
    pub coarse_grid: bool,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self { max_outputs: 60, max_components: 12, max_space: None, coarse_grid: true }
    }
}

const PARTS: [&str; 12] = [
    "LA-30",
    "ATT-20",
    "SD5xx-S2",
    "SD5xx-T04",
    "SD5xx-T08",
    "SD5xx-T10",
    "SD5xx-T12",
    "SD5xx-T15",
    "MV512",
    "MV512T",
    "MR512",
    "IFH-4",
];

fn in_port(spec: &ComponentSpec) -> &str {
    &spec.ports.iter().find(|p| p.direction == PortDirection::In).unwrap().id
}

/// Lines leaving each out-port when `arriving` enters the in-port.
fn out_ports(spec: &ComponentSpec, arriving: &BTreeSet<SignalLine>) -> Vec<(String, BTreeSet<SignalLine>)> {
    let inp = in_port(spec);
    spec.ports
        .iter()
        .filter(|p| p.direction == PortDirection::Out)
        .map(|p| {
            let lines = spec
                .transfers
                .iter()
                .filter(|t| t.from == inp && t.to == p.id)
                .flat_map(|t| t.curves.keys().copied())
                .filter(|l| arriving.contains(l))
                .collect();
            (p.id.clone(), lines)
        })
        .filter(|(_, l): &(String, BTreeSet<SignalLine>)| !l.is_empty())
        .collect()
}

fn space_of(spec: &ComponentSpec) -> u64 {
    spec.regulators.values().map(|r| r.len() as u64).product()
}

fn random_spectrum(rng: &mut ChaCha8Rng, line: SignalLine) -> Spectrum {
    let (lo, hi) = line.band().range_mhz();
    if rng.random_bool(0.5) {
        return Spectrum::flat(line.band(), rng.random_range(60.0..100.0));
    }
    let mid = rng.random_range(lo + 1.0..hi - 1.0);
    Spectrum {
        anchors: [lo, mid, hi]
            .iter()
            .map(|f| SpectrumAnchor { freq_mhz: Frequency::mhz(*f).unwrap(), level_dbuv: rng.random_range(60.0..100.0) })
            .collect(),
    }
}

fn random_plan(rng: &mut ChaCha8Rng, line: SignalLine) -> ChannelPlan {
    let (lo, _) = line.band().range_mhz();
    let bw = line.band().default_channel_bandwidth_mhz();
    let n = rng.random_range(1..=30);
    ChannelPlan::evenly_spaced(line, lo + bw, bw, n, bw)
}

/// A valid tree network built from catalog parts, with a random scenario.
pub fn random_tree(rng: &mut ChaCha8Rng, cfg: &GenConfig) -> (Network, Scenario) {
    let catalog = smatv_core::builtin_catalog();
    let mut net = Network::new(CatalogBase::Builtin);
    if cfg.coarse_grid {
        let mut points = BTreeMap::new();
        let terr_step = *[40.0, 80.0, 120.0].choose(rng).unwrap();
        let sat_step = *[100.0, 200.0].choose(rng).unwrap();
        for line in SignalLine::ALL {
            let pts = if line == SignalLine::Terr {
                FrequencyGrid::stepped(47.0, 862.0, terr_step)
            } else {
                FrequencyGrid::stepped(950.0, 2150.0, sat_step)
            };
            points.insert(line, pts);
        }
        net.grid = FrequencyGrid { points };
    }

    let lines: Vec<SignalLine> = if rng.random_bool(0.5) { SignalLine::ALL.to_vec() } else { vec![SignalLine::Terr] };
    for line in &lines {
        let cnr = if rng.random_bool(0.3) { Cnr::Unconstrained } else { Cnr::Db(rng.random_range(10.0..70.0)) };
        net.add_node(
            format!("src_{}", line.as_str().to_lowercase()),
            NodeKind::Source(SourceNode {
                lines: [(*line, SourceLine { spectrum: random_spectrum(rng, *line), cnr_db: cnr })].into(),
                channel_plan: random_plan(rng, *line),
            }),
        );
    }

    let mut space: u64 = 1;
    let fits = |spec: &ComponentSpec, space: u64| cfg.max_space.is_none_or(|m| space.saturating_mul(space_of(spec)) <= m);
    let roots: Vec<&str> = PARTS[..11].iter().copied().filter(|p| fits(&catalog.components[*p], 1)).collect();
    let root_part = *roots.choose(rng).unwrap();
    let root_spec = &catalog.components[root_part];
    space *= space_of(root_spec);
    net.add_node("c0", NodeKind::Component(ComponentNode { component: root_part.into(), regulators: BTreeMap::new() }));
    let root_in = in_port(root_spec).to_string();
    let mut arriving = BTreeSet::new();
    for line in &lines {
        let id = format!("src_{}", line.as_str().to_lowercase());
        net.add_edge(format!("feed_{id}"), PortRef::new(&id, "out"), PortRef::new("c0", &root_in), "trunk", rng.random_range(1.0..20.0), [*line]);
        arriving.insert(*line);
    }
    let mut open: Vec<(PortRef, BTreeSet<SignalLine>)> = out_ports(root_spec, &arriving)
        .into_iter()
        .map(|(p, l)| (PortRef::new("c0", p), l))
        .collect();

    let mut components = 1;
    let mut outputs = 0;
    let mut edges = 0;
    while !open.is_empty() && outputs < cfg.max_outputs {
        let (port, reaching) = open.swap_remove(rng.random_range(0..open.len()));
        let cable = if rng.random_bool(0.5) { "trunk" } else { "drop" };
        let length = rng.random_range(0.5..60.0);
        edges += 1;

        let candidates: Vec<&str> = PARTS
            .iter()
            .copied()
            .filter(|p| {
                let spec = &catalog.components[*p];
                let accepts = &spec.port(in_port(spec)).unwrap().lines;
                fits(spec, space) && reaching.iter().any(|l| accepts.contains(l))
            })
            .collect();
        if components < cfg.max_components && !candidates.is_empty() && rng.random_bool(0.45) {
            let part = *candidates.choose(rng).unwrap();
            let spec = &catalog.components[part];
            let inp = in_port(spec);
            let carried: BTreeSet<_> = reaching.intersection(&spec.port(inp).unwrap().lines).copied().collect();
            let id = format!("c{components}");
            components += 1;
            space = space.saturating_mul(space_of(spec));
            net.add_node(&id, NodeKind::Component(ComponentNode { component: part.into(), regulators: BTreeMap::new() }));
            net.add_edge(format!("e{edges}"), port, PortRef::new(&id, inp), cable, length, carried.iter().copied());
            for (p, l) in out_ports(spec, &carried) {
                open.push((PortRef::new(&id, p), l));
            }
        } else {
            let has_sat = reaching.iter().any(|l| *l != SignalLine::Terr);
            let tv = !has_sat || (reaching.contains(&SignalLine::Terr) && rng.random_bool(0.3));
            let (kind, carried): (OutputKind, BTreeSet<SignalLine>) =
                if tv { (OutputKind::Tv, [SignalLine::Terr].into()) } else { (OutputKind::SatReceiver, reaching.clone()) };
            let id = format!("o{outputs}");
            outputs += 1;
            net.add_node(
                &id,
                NodeKind::Output(OutputNode {
                    port_kind: kind,
                    floor: rng.random_bool(0.5).then(|| rng.random_range(1..6)),
                    apartment: rng.random_bool(0.5).then(|| rng.random_range(1..5)),
                }),
            );
            net.add_edge(format!("e{edges}"), port, PortRef::new(&id, "in"), cable, length, carried);
        }
    }

    let mut scenario = Scenario::default();
    for r in regulators(&net) {
        let spec = &net.catalog.components[&net.nodes[&r.node].component().unwrap().component];
        let n = spec.regulators[&r.group].len();
        scenario.set_regulator(&r, rng.random_range(0..n));
    }
    if rng.random_bool(0.3) {
        scenario.set_trim(&format!("src_{}", lines[0].as_str().to_lowercase()), lines[0], rng.random_range(-5.0..5.0));
    }
    (net, scenario)
}

/// A small tree with at least one regulator, a scenario space no larger than
/// `max_space`, and level windows placed around its actual output levels so
/// that regulator choices matter.
pub fn random_instance(seed: u64, max_space: u64) -> (Network, Scenario) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cfg = GenConfig { max_outputs: 8, max_components: 5, max_space: Some(max_space), coarse_grid: true };
    loop {
        let (mut net, sc) = random_tree(&mut rng, &cfg);
        if regulators(&net).is_empty() || net.outputs().next().is_none() {
            continue;
        }
        let Ok(result) = propagate(&net, &sc) else { continue };
        let mut levels: Vec<f64> = result.outputs.values().flat_map(|o| o.lines.values().map(|s| s.min_level_dbuv)).collect();
        if levels.is_empty() {
            continue;
        }
        levels.sort_by(f64::total_cmp);
        let centre = levels[levels.len() / 2];
        for band in smatv_core::Band::ALL {
            let limits = net.constraints.band_mut(band);
            let width = rng.random_range(4.0..20.0);
            limits.level_min_dbuv = centre - width + rng.random_range(-3.0..3.0);
            limits.level_max_dbuv = centre + width + rng.random_range(-3.0..3.0);
            limits.min_cnr_db = rng.random_range(0.0..20.0);
        }
        return (net, sc);
    }
}
