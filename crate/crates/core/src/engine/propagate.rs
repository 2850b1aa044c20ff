use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::EngineError;
use crate::catalog::cable_attenuation;
use crate::model::validate::{has_errors, topological_order};
use crate::model::{
    validate_network, Edge, FrequencyGrid, Network, NodeId, NodeKind, OutputKind, PortRef, SOURCE_PORT,
};
use crate::scenario::Scenario;
use crate::units::{Cnr, SignalLine};

/// Level and C/N of one line at one port, one value per grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineTrace {
    pub source: NodeId,
    pub levels_dbuv: Vec<f64>,
    pub cnr_db: Vec<Cnr>,
}

impl LineTrace {
    pub fn min_level(&self) -> f64 {
        self.levels_dbuv.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_level(&self) -> f64 {
        self.levels_dbuv.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Lowest C/N and the grid index where it occurs (first on ties).
    pub fn worst_cnr(&self) -> (Cnr, Option<usize>) {
        let mut worst = (Cnr::Unconstrained, None);
        for (i, c) in self.cnr_db.iter().enumerate() {
            if let Cnr::Db(db) = c {
                if worst.0.db().is_none_or(|w| *db < w) {
                    worst = (*c, Some(i));
                }
            }
        }
        worst
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineSummary {
    pub min_level_dbuv: f64,
    pub max_level_dbuv: f64,
    pub worst_cnr_db: Cnr,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub worst_cnr_mhz: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputSummary {
    pub kind: OutputKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub floor: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub apartment: Option<u32>,
    /// Lines that actually arrive, whether or not the outlet needs them.
    pub lines: BTreeMap<SignalLine, LineSummary>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationResult {
    pub grid: FrequencyGrid,
    pub traces: BTreeMap<PortRef, BTreeMap<SignalLine, LineTrace>>,
    pub outputs: BTreeMap<NodeId, OutputSummary>,
    pub scenario: Scenario,
}

impl SimulationResult {
    pub fn trace(&self, port: &PortRef, line: SignalLine) -> Option<&LineTrace> {
        self.traces.get(port)?.get(&line)
    }

    pub fn output_trace(&self, output: &str, line: SignalLine) -> Option<&LineTrace> {
        self.trace(&PortRef::new(output, crate::model::OUTPUT_PORT), line)
    }
}

const LINES: usize = SignalLine::ALL.len();

fn slot(port: usize, line: SignalLine) -> usize {
    port * LINES + line as usize
}

/// `10^(-db/10)`. Levels are also carried in this form so that stage noise
/// becomes a product instead of a `powf` per grid point.
fn inv(db: f64) -> f64 {
    10f64.powf(-db / 10.0)
}

/// A regulated transfer's knob: resolved per run from the scenario.
struct Knob<'n> {
    group: &'n str,
    positions_db: &'n [f64],
    positions_inv: Vec<f64>,
    /// Position used when the scenario does not mention this group.
    stored: usize,
}

struct CompiledTransfer<'n> {
    input: usize,
    output: usize,
    line: SignalLine,
    base_db: Vec<f64>,
    base_inv: Vec<f64>,
    /// `10^(F/10)` for active stages, `None` for passive ones
    noise_factor: Option<f64>,
    knob: Option<Knob<'n>>,
}

struct CompiledEdge {
    from: usize,
    to: usize,
    /// attenuation (negative dB) per carried line and grid point
    loss_db: Vec<(SignalLine, Vec<f64>, Vec<f64>)>,
}

struct CompiledSourceLine {
    line: SignalLine,
    /// untrimmed levels and their `inv`, `None` where the spectrum misses the grid
    levels: Option<(Vec<f64>, Vec<f64>)>,
    noise: f64,
}

enum Step<'n> {
    Source { node: &'n str, port: usize, lines: Vec<CompiledSourceLine> },
    Component { node: &'n str, transfers: Vec<CompiledTransfer<'n>> },
    Output,
}

/// Per-run storage. A filled `(port, line)` slot owns three consecutive
/// ranges of `buf` (level, inverse level, noise ratio) and records where they
/// start and which source feeds it.
struct Buffer {
    buf: Vec<f64>,
    at: Vec<Option<(usize, usize)>>,
}

/// A validated network with everything that does not depend on knob settings
/// precomputed, ready to be evaluated under many scenarios.
pub struct Simulator<'n> {
    net: &'n Network,
    /// `(node, port)` for every port index
    ports: Vec<(&'n str, &'n str)>,
    /// source node per source index
    sources: Vec<&'n str>,
    /// topological order, with the edges leaving each node
    steps: Vec<(Step<'n>, Vec<CompiledEdge>)>,
    /// grid points per line
    points: [usize; LINES],
    buffer_len: usize,
}

impl<'n> Simulator<'n> {
    pub fn new(net: &'n Network) -> Result<Self, EngineError> {
        let diags = validate_network(net);
        if has_errors(&diags) {
            return Err(EngineError::InvalidNetwork(diags));
        }
        let order = topological_order(net).map_err(|_| EngineError::InvalidNetwork(diags.clone()))?;

        let mut ports: Vec<(&'n str, &'n str)> = Vec::new();
        let mut index: HashMap<(&'n str, &'n str), usize> = HashMap::new();
        let mut port_of = |node: &'n str, port: &'n str| {
            *index.entry((node, port)).or_insert_with(|| {
                ports.push((node, port));
                ports.len() - 1
            })
        };

        let mut edges_from: HashMap<&str, Vec<&Edge>> = HashMap::new();
        for e in net.edges.values() {
            edges_from.entry(e.from.node.as_str()).or_default().push(e);
        }

        let mut sources = Vec::new();
        let mut steps = Vec::with_capacity(order.len());
        for id in order {
            let node = &net.nodes[id];
            let step = match &node.kind {
                NodeKind::Source(src) => {
                    sources.push(id);
                    let lines = src
                        .lines
                        .iter()
                        .map(|(line, sl)| {
                            let levels: Option<Vec<f64>> =
                                net.grid.line(*line).iter().map(|f| sl.spectrum.level_at(*f)).collect();
                            let levels = levels.map(|l| {
                                let i = l.iter().map(|x| inv(*x)).collect();
                                (l, i)
                            });
                            CompiledSourceLine { line: *line, levels, noise: sl.cnr_db.noise_ratio() }
                        })
                        .collect();
                    Step::Source { node: id, port: port_of(id, SOURCE_PORT), lines }
                }
                NodeKind::Component(c) => {
                    let spec = net.catalog.component(&c.component)?;
                    let mut transfers = Vec::new();
                    for t in &spec.transfers {
                        for (line, curve) in &t.curves {
                            let knob = spec.regulator_for(*line).filter(|_| t.regulated).map(|(group, reg)| Knob {
                                group,
                                positions_db: &reg.positions_db,
                                positions_inv: reg.positions_db.iter().map(|p| inv(*p)).collect(),
                                stored: c.regulators.get(group).copied().unwrap_or(reg.current_index),
                            });
                            let base_db: Vec<f64> = net.grid.line(*line).iter().map(|f| curve.gain_at(*f)).collect();
                            transfers.push(CompiledTransfer {
                                input: port_of(id, &t.from),
                                output: port_of(id, &t.to),
                                line: *line,
                                base_inv: base_db.iter().map(|g| inv(*g)).collect(),
                                base_db,
                                noise_factor: t.active.then(|| inv(-t.noise_figure_db)),
                                knob,
                            });
                        }
                    }
                    Step::Component { node: id, transfers }
                }
                NodeKind::Output(_) => Step::Output,
            };

            let mut edges = Vec::new();
            for e in edges_from.get(id).into_iter().flatten() {
                let cable = net.catalog.cable(&e.cable)?;
                let mut loss_db = Vec::new();
                for line in &e.lines {
                    let per_point = net
                        .grid
                        .line(*line)
                        .iter()
                        .map(|f| cable_attenuation(cable, *f, e.length_m))
                        .collect::<Result<Vec<_>, _>>()?;
                    let per_point_inv = per_point.iter().map(|a| inv(*a)).collect();
                    loss_db.push((*line, per_point, per_point_inv));
                }
                edges.push(CompiledEdge {
                    from: port_of(&e.from.node, &e.from.port),
                    to: port_of(&e.to.node, &e.to.port),
                    loss_db,
                });
            }
            steps.push((step, edges));
        }

        let points = SignalLine::ALL.map(|l| net.grid.line(l).len());
        let buffer_len = ports.len() * 3 * points.iter().sum::<usize>();
        Ok(Self { net, ports, sources, steps, points, buffer_len })
    }

    pub fn network(&self) -> &'n Network {
        self.net
    }

    /// Evaluates every port under `scenario`.
    pub fn run(&self, scenario: &Scenario) -> Result<SimulationResult, EngineError> {
        let slots = self.propagate_slots(scenario)?;
        Ok(self.finish(slots, scenario, |_| true))
    }

    /// Like [`run`](Self::run) but keeps traces at outlets only, which is all
    /// that output compliance needs.
    pub fn run_outputs(&self, scenario: &Scenario) -> Result<SimulationResult, EngineError> {
        let slots = self.propagate_slots(scenario)?;
        let net = self.net;
        Ok(self.finish(slots, scenario, |node| matches!(net.nodes[node].kind, NodeKind::Output(_))))
    }

    fn propagate_slots(&self, scenario: &Scenario) -> Result<Buffer, EngineError> {
        let net = self.net;
        scenario.validate(net)?;
        let mut b = Buffer { buf: Vec::with_capacity(self.buffer_len), at: vec![None; self.ports.len() * LINES] };
        let claim = |b: &mut Buffer, port: usize, line: SignalLine, source: usize| {
            let s = &mut b.at[slot(port, line)];
            if s.is_some() {
                let (node, port) = self.ports[port];
                return Err(EngineError::AmbiguousArrival { port: PortRef::new(node, port), line });
            }
            let o = b.buf.len();
            *s = Some((o, source));
            b.buf.resize(o + 3 * self.points[line as usize], 0.0);
            Ok(o)
        };

        let mut source_index = 0;
        for (step, edges) in &self.steps {
            match step {
                Step::Source { node, port, lines } => {
                    for CompiledSourceLine { line, levels: base, noise } in lines {
                        let (base, base_inv) =
                            base.as_ref().ok_or_else(|| EngineError::MissingSource { node: node.to_string(), line: *line })?;
                        let trim = scenario.trim(node, *line);
                        let trim_inv = inv(trim);
                        let n = base.len();
                        let o = claim(&mut b, *port, *line, source_index)?;
                        for i in 0..n {
                            b.buf[o + i] = base[i] + trim;
                            b.buf[o + n + i] = base_inv[i] * trim_inv;
                            b.buf[o + 2 * n + i] = *noise;
                        }
                    }
                    source_index += 1;
                }
                Step::Component { node, transfers } => {
                    let chosen = scenario.regulators.get(*node);
                    for ct in transfers {
                        let Some((from, source)) = b.at[slot(ct.input, ct.line)] else { continue };
                        let (offset, offset_inv) = ct.knob.as_ref().map_or((0.0, 1.0), |k| {
                            let i = chosen.and_then(|g| g.get(k.group)).copied().unwrap_or(k.stored);
                            (k.positions_db[i], k.positions_inv[i])
                        });
                        let n = ct.base_db.len();
                        let o = claim(&mut b, ct.output, ct.line, source)?;
                        for i in 0..n {
                            let level_inv = b.buf[from + n + i];
                            b.buf[o + i] = b.buf[from + i] + (ct.base_db[i] + offset);
                            b.buf[o + n + i] = level_inv * ct.base_inv[i] * offset_inv;
                            // an active stage adds noise referred to its input level
                            let added = ct.noise_factor.map_or(0.0, |f| level_inv * f);
                            b.buf[o + 2 * n + i] = b.buf[from + 2 * n + i] + added;
                        }
                    }
                }
                Step::Output => {}
            }

            for edge in edges {
                for (line, loss, loss_inv) in &edge.loss_db {
                    let Some((from, source)) = b.at[slot(edge.from, *line)] else { continue };
                    let n = loss.len();
                    let o = claim(&mut b, edge.to, *line, source)?;
                    for i in 0..n {
                        b.buf[o + i] = b.buf[from + i] + loss[i];
                        b.buf[o + n + i] = b.buf[from + n + i] * loss_inv[i];
                        b.buf[o + 2 * n + i] = b.buf[from + 2 * n + i];
                    }
                }
            }
        }
        Ok(b)
    }

    fn finish(&self, b: Buffer, scenario: &Scenario, keep: impl Fn(&str) -> bool) -> SimulationResult {
        let net = self.net;
        let mut traces: BTreeMap<PortRef, BTreeMap<SignalLine, LineTrace>> = BTreeMap::new();
        for (p, (node, port)) in self.ports.iter().enumerate() {
            if !keep(node) {
                continue;
            }
            let mut lines = BTreeMap::new();
            for line in SignalLine::ALL {
                let Some((o, source)) = b.at[slot(p, line)] else { continue };
                let n = self.points[line as usize];
                let trace = LineTrace {
                    source: self.sources[source].to_string(),
                    levels_dbuv: b.buf[o..o + n].to_vec(),
                    cnr_db: b.buf[o + 2 * n..o + 3 * n].iter().map(|r| Cnr::from_noise_ratio(*r)).collect(),
                };
                lines.insert(line, trace);
            }
            if !lines.is_empty() {
                traces.insert(PortRef::new(*node, *port), lines);
            }
        }
        let mut outputs = BTreeMap::new();
        for (id, out) in net.outputs() {
            let mut lines = BTreeMap::new();
            if let Some(arrived) = traces.get(&PortRef::new(id.as_str(), crate::model::OUTPUT_PORT)) {
                for (line, t) in arrived {
                    let (worst, at) = t.worst_cnr();
                    lines.insert(
                        *line,
                        LineSummary {
                            min_level_dbuv: t.min_level(),
                            max_level_dbuv: t.max_level(),
                            worst_cnr_db: worst,
                            worst_cnr_mhz: at.map(|i| net.grid.line(*line)[i].value()),
                        },
                    );
                }
            }
            outputs.insert(
                id.clone(),
                OutputSummary { kind: out.port_kind, floor: out.floor, apartment: out.apartment, lines },
            );
        }

        SimulationResult { grid: net.grid.clone(), traces, outputs, scenario: scenario.clone() }
    }
}

/// Validates `net` and evaluates it once under `scenario`.
pub fn propagate(net: &Network, scenario: &Scenario) -> Result<SimulationResult, EngineError> {
    Simulator::new(net)?.run(scenario)
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use super::*;
    use crate::catalog::{
        CableAnchor, CableSpec, Catalog, ComponentClass, ComponentSpec, GainCurve, GainRegulator, PortDirection,
        PortRole, PortSpec, TransferEntry,
    };
    use crate::model::{CatalogBase, ComponentNode, OutputNode, SourceLine, SourceNode, Spectrum};
    use crate::units::{Band, Frequency};

    fn amp(gain: f64, nf: f64) -> ComponentSpec {
        let terr: BTreeSet<_> = [SignalLine::Terr].into();
        ComponentSpec {
            id: "amp".into(),
            class: ComponentClass::Amplifier,
            ports: vec![
                PortSpec { id: "in".into(), direction: PortDirection::In, lines: terr.clone(), role: PortRole::Trunk },
                PortSpec { id: "out".into(), direction: PortDirection::Out, lines: terr.clone(), role: PortRole::Trunk },
            ],
            transfers: vec![TransferEntry {
                from: "in".into(),
                to: "out".into(),
                curves: [(SignalLine::Terr, GainCurve::flat(Band::Terrestrial, gain))].into(),
                noise_figure_db: nf,
                active: true,
                regulated: true,
            }],
            regulators: [(
                "g".to_string(),
                GainRegulator { positions_db: vec![-6.0, 0.0], current_index: 1, lines: terr },
            )]
            .into(),
            max_output_power_dbm: None,
            tap_isolation_db: None,
            metadata: BTreeMap::new(),
        }
    }

    fn flat_cable() -> CableSpec {
        // b = 0 makes attenuation frequency independent: 10 dB/100 m
        CableSpec {
            id: "c".into(),
            anchors: vec![
                CableAnchor { freq_mhz: Frequency::mhz(100.0).unwrap(), db_per_100m: 10.0 },
                CableAnchor { freq_mhz: Frequency::mhz(400.0).unwrap(), db_per_100m: 10.0 },
            ],
        }
    }

    /// src -(10 m)- amp1 -(20 m)- amp2 -(10 m)- tv
    fn chain() -> Network {
        let mut net = Network::new(CatalogBase::Empty);
        net.catalog = Catalog::from_parts(vec![amp(20.0, 8.0)], vec![flat_cable()]).unwrap();
        net.grid.points.retain(|l, _| *l == SignalLine::Terr);
        let src = SourceNode {
            lines: [(
                SignalLine::Terr,
                SourceLine { spectrum: Spectrum::flat(Band::Terrestrial, 60.0), cnr_db: Cnr::Db(50.0) },
            )]
            .into(),
            channel_plan: crate::model::ChannelPlan::evenly_spaced(SignalLine::Terr, 474.0, 8.0, 4, 8.0),
        };
        net.add_node("src", NodeKind::Source(src));
        for a in ["amp1", "amp2"] {
            net.add_node(a, NodeKind::Component(ComponentNode { component: "amp".into(), regulators: BTreeMap::new() }));
        }
        net.add_node("tv", NodeKind::Output(OutputNode { port_kind: OutputKind::Tv, floor: None, apartment: None }));
        let t = [SignalLine::Terr];
        net.add_edge("e1", PortRef::new("src", "out"), PortRef::new("amp1", "in"), "c", 10.0, t);
        net.add_edge("e2", PortRef::new("amp1", "out"), PortRef::new("amp2", "in"), "c", 20.0, t);
        net.add_edge("e3", PortRef::new("amp2", "out"), PortRef::new("tv", "in"), "c", 10.0, t);
        net
    }

    #[test]
    fn chain_levels_and_noise_by_hand() {
        let net = chain();
        let r = propagate(&net, &Scenario::default()).unwrap();
        let t = r.output_trace("tv", SignalLine::Terr).unwrap();
        // 60 - 1 + 20 - 2 + 20 - 1
        for l in &t.levels_dbuv {
            assert!((l - 96.0).abs() < 1e-9);
        }
        // stage inputs 59 and 77 dBµV, F = 8
        let expected = combine_cnr_oracle(&[50.0, 59.0 - 8.0, 77.0 - 8.0]);
        for c in &t.cnr_db {
            assert!((c.db().unwrap() - expected).abs() < 1e-9);
        }
        assert_eq!(t.source, "src");
        let s = &r.outputs["tv"].lines[&SignalLine::Terr];
        assert!((s.min_level_dbuv - 96.0).abs() < 1e-9);
        assert_eq!(s.worst_cnr_mhz, Some(47.0));
    }

    fn combine_cnr_oracle(dbs: &[f64]) -> f64 {
        let n: f64 = dbs.iter().map(|d| 10f64.powf(-d / 10.0)).sum();
        -10.0 * n.log10()
    }

    #[test]
    fn regulator_and_trim_shift_levels() {
        let net = chain();
        let mut sc = Scenario::default();
        sc.set_regulator(&crate::scenario::RegulatorRef { node: "amp2".into(), group: "g".into() }, 0);
        sc.set_trim("src", SignalLine::Terr, 2.5);
        let r = propagate(&net, &sc).unwrap();
        let l = r.output_trace("tv", SignalLine::Terr).unwrap().levels_dbuv[0];
        assert!((l - (96.0 - 6.0 + 2.5)).abs() < 1e-9);
        assert_eq!(r.scenario, sc);
    }

    #[test]
    fn invalid_scenario_is_rejected() {
        let net = chain();
        let mut sc = Scenario::default();
        sc.set_regulator(&crate::scenario::RegulatorRef { node: "amp1".into(), group: "g".into() }, 5);
        assert!(matches!(propagate(&net, &sc), Err(EngineError::Scenario(_))));
    }

    #[test]
    fn missing_spectrum_is_an_error() {
        let mut net = chain();
        if let NodeKind::Source(s) = &mut net.nodes.get_mut("src").unwrap().kind {
            s.lines.get_mut(&SignalLine::Terr).unwrap().spectrum = Spectrum { anchors: vec![] };
        }
        match propagate(&net, &Scenario::default()) {
            Err(EngineError::MissingSource { node, line }) => {
                assert_eq!(node, "src");
                assert_eq!(line, SignalLine::Terr);
            }
            Err(EngineError::InvalidNetwork(_)) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn cycle_is_rejected_before_running() {
        let mut net = chain();
        net.add_edge("loop", PortRef::new("amp2", "out"), PortRef::new("amp1", "in"), "c", 1.0, [SignalLine::Terr]);
        assert!(matches!(Simulator::new(&net), Err(EngineError::InvalidNetwork(_))));
    }
}
