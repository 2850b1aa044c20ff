use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use petgraph::algo::toposort;
use petgraph::graph::DiGraph;
use serde::{Deserialize, Serialize};

use super::{Network, NodeKind, PortRef, OUTPUT_PORT, SOURCE_PORT};
use crate::catalog::PortDirection;
use crate::units::{Band, SignalLine};

/// Longest subscriber line the multiswitches are specified for.
pub const MAX_DROP_LENGTH_M: f64 = 80.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagnosticCode {
    Cycle,
    AmbiguousPath,
    UnknownNode,
    UnknownPort,
    PortDirection,
    UnknownComponent,
    UnknownCable,
    UnknownRegulator,
    RegulatorIndex,
    InvalidLength,
    EmptyEdge,
    UnsupportedLine,
    SourceInbound,
    SourceLines,
    OutputInbound,
    InvalidSpectrum,
    ChannelPlan,
    InvalidGrid,
    InvalidConstraint,
    DropTooLong,
    LineNotDelivered,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub code: DiagnosticCode,
    /// Offending node, edge, port or constraint.
    pub subject: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{sev}: {} ({:?}): {}", self.subject, self.code, self.message)
    }
}

struct Collector(Vec<Diagnostic>);

impl Collector {
    fn error(&mut self, code: DiagnosticCode, subject: impl Into<String>, message: impl Into<String>) {
        self.push(Severity::Error, code, subject, message);
    }

    fn warn(&mut self, code: DiagnosticCode, subject: impl Into<String>, message: impl Into<String>) {
        self.push(Severity::Warning, code, subject, message);
    }

    fn push(&mut self, severity: Severity, code: DiagnosticCode, subject: impl Into<String>, message: impl Into<String>) {
        self.0.push(Diagnostic {
            severity,
            code,
            subject: subject.into(),
            message: message.into(),
        });
    }
}

/// Checks every structural invariant of `net`. An empty result means the
/// network is fit for propagation; warnings alone do not block it.
pub fn validate_network(net: &Network) -> Vec<Diagnostic> {
    let mut out = Collector(Vec::new());
    check_constraints(net, &mut out);
    check_grid(net, &mut out);
    check_nodes(net, &mut out);
    let edges_ok = check_edges(net, &mut out);
    if let Some(order) = check_acyclic(net, &mut out) {
        if edges_ok {
            check_line_trees(net, &order, &mut out);
        }
    }
    out.0
}

pub(crate) fn has_errors(diags: &[Diagnostic]) -> bool {
    diags.iter().any(|d| d.severity == Severity::Error)
}

fn check_constraints(net: &Network, out: &mut Collector) {
    let c = &net.constraints;
    for band in Band::ALL {
        let lim = c.band(band);
        let subject = format!("constraints.{band}");
        if !(lim.level_min_dbuv.is_finite() && lim.level_max_dbuv.is_finite()) {
            out.error(DiagnosticCode::InvalidConstraint, &subject, "level window must be finite");
        } else if lim.level_min_dbuv >= lim.level_max_dbuv {
            out.error(
                DiagnosticCode::InvalidConstraint,
                &subject,
                format!("level window min {} >= max {}", lim.level_min_dbuv, lim.level_max_dbuv),
            );
        }
        if !lim.min_cnr_db.is_finite() {
            out.error(DiagnosticCode::InvalidConstraint, &subject, "C/N floor must be finite");
        }
    }
    if !(c.min_tap_isolation_db.is_finite() && c.min_tap_isolation_db >= 0.0) {
        out.error(DiagnosticCode::InvalidConstraint, "constraints.min_tap_isolation_db", "must be finite and >= 0");
    }
}

fn check_grid(net: &Network, out: &mut Collector) {
    let active: BTreeSet<SignalLine> = net
        .nodes
        .values()
        .filter_map(|n| n.source())
        .flat_map(|s| s.lines.keys().copied())
        .collect();
    for line in SignalLine::ALL {
        let pts = net.grid.line(line);
        let subject = format!("grid.{line}");
        if active.contains(&line) && pts.len() < 2 {
            out.error(DiagnosticCode::InvalidGrid, &subject, "an active line needs at least 2 grid points");
        }
        if pts.windows(2).any(|w| w[0].value() >= w[1].value()) {
            out.error(DiagnosticCode::InvalidGrid, &subject, "grid points must be strictly increasing");
        }
        if let Some(f) = pts.iter().find(|f| !line.band().contains(**f)) {
            out.error(DiagnosticCode::InvalidGrid, &subject, format!("{f} outside the {} band", line.band()));
        }
    }
}

fn check_nodes(net: &Network, out: &mut Collector) {
    for (id, node) in &net.nodes {
        let inbound = net.inbound(id).count();
        match &node.kind {
            NodeKind::Source(s) => {
                if inbound > 0 {
                    out.error(DiagnosticCode::SourceInbound, id, "source nodes cannot have inbound edges");
                }
                if s.lines.is_empty() {
                    out.error(DiagnosticCode::SourceLines, id, "source emits no lines");
                }
                for (line, sl) in &s.lines {
                    if sl.spectrum.anchors.iter().any(|a| !a.level_dbuv.is_finite()) {
                        out.error(DiagnosticCode::InvalidSpectrum, id, format!("non-finite level on {line}"));
                    }
                    if sl.spectrum.anchors.windows(2).any(|w| w[0].freq_mhz.value() >= w[1].freq_mhz.value()) {
                        out.error(DiagnosticCode::InvalidSpectrum, id, format!("{line} anchors not increasing"));
                    }
                    if sl.cnr_db.db().is_some_and(|c| !c.is_finite()) {
                        out.error(DiagnosticCode::InvalidSpectrum, id, format!("non-finite C/N on {line}"));
                    }
                    if s.channel_plan.count(*line) == 0 {
                        out.error(DiagnosticCode::ChannelPlan, id, format!("no channels planned on active line {line}"));
                    }
                }
                for ch in s.channel_plan.out_of_band() {
                    out.error(
                        DiagnosticCode::ChannelPlan,
                        id,
                        format!("channel at {} ({} MHz wide) leaves the {} band", ch.center_mhz, ch.bandwidth_mhz, ch.line),
                    );
                }
                for ch in &s.channel_plan.channels {
                    if !s.lines.contains_key(&ch.line) {
                        out.warn(DiagnosticCode::ChannelPlan, id, format!("channel planned on {} which is not emitted", ch.line));
                    }
                }
            }
            NodeKind::Component(c) => match net.catalog.components.get(&c.component) {
                None => out.error(
                    DiagnosticCode::UnknownComponent,
                    id,
                    format!("component '{}' not in catalog", c.component),
                ),
                Some(spec) => {
                    for (group, &index) in &c.regulators {
                        match spec.regulators.get(group) {
                            None => out.error(
                                DiagnosticCode::UnknownRegulator,
                                id,
                                format!("'{}' has no regulator '{group}'", spec.id),
                            ),
                            Some(r) if index >= r.len() => out.error(
                                DiagnosticCode::RegulatorIndex,
                                id,
                                format!("regulator '{group}' index {index} outside 0..{}", r.len()),
                            ),
                            Some(_) => {}
                        }
                    }
                }
            },
            NodeKind::Output(_) => {
                if inbound != 1 {
                    out.error(
                        DiagnosticCode::OutputInbound,
                        id,
                        format!("output needs exactly one inbound edge, found {inbound}"),
                    );
                }
            }
        }
    }
}

/// Returns whether every edge endpoint resolved.
fn check_edges(net: &Network, out: &mut Collector) -> bool {
    let mut ok = true;
    for (id, e) in &net.edges {
        let mut endpoint = |port: &PortRef, want: PortDirection| {
            let Some(node) = net.nodes.get(&port.node) else {
                out.error(DiagnosticCode::UnknownNode, id, format!("edge references missing node '{}'", port.node));
                return None;
            };
            let Some(info) = net.port_info(port) else {
                if node.component().is_some_and(|c| !net.catalog.components.contains_key(&c.component)) {
                    // reported on the node
                    return None;
                }
                out.error(DiagnosticCode::UnknownPort, id, format!("no port '{port}'"));
                return None;
            };
            if info.direction != want {
                out.error(DiagnosticCode::PortDirection, id, format!("port '{port}' has the wrong direction"));
                return None;
            }
            Some(info)
        };
        let from = endpoint(&e.from, PortDirection::Out);
        let to = endpoint(&e.to, PortDirection::In);
        match (from, to) {
            (Some(from), Some(to)) => {
                for line in &e.lines {
                    if !from.lines.contains(line) || !to.lines.contains(line) {
                        out.error(
                            DiagnosticCode::UnsupportedLine,
                            id,
                            format!("{line} not supported by both '{}' and '{}'", e.from, e.to),
                        );
                    }
                }
            }
            _ => ok = false,
        }
        if e.lines.is_empty() {
            out.error(DiagnosticCode::EmptyEdge, id, "edge carries no lines");
        }
        if !(e.length_m.is_finite() && e.length_m >= 0.0) {
            out.error(DiagnosticCode::InvalidLength, id, format!("length {} m", e.length_m));
        }
        if !net.catalog.cables.contains_key(&e.cable) {
            out.error(DiagnosticCode::UnknownCable, id, format!("cable '{}' not in catalog", e.cable));
        }
        let into_output = net.nodes.get(&e.to.node).is_some_and(|n| n.output().is_some());
        if into_output && e.length_m > MAX_DROP_LENGTH_M {
            out.warn(
                DiagnosticCode::DropTooLong,
                id,
                format!("drop of {} m exceeds the {MAX_DROP_LENGTH_M} m subscriber line length", e.length_m),
            );
        }
    }
    ok
}

/// Node ids in topological order, or `None` after reporting a cycle.
pub(crate) fn topological_order(net: &Network) -> Result<Vec<&str>, &str> {
    let mut graph = DiGraph::<&str, ()>::new();
    let index: HashMap<&str, _> = net.nodes.keys().map(|id| (id.as_str(), graph.add_node(id.as_str()))).collect();
    for e in net.edges.values() {
        if let (Some(&a), Some(&b)) = (index.get(e.from.node.as_str()), index.get(e.to.node.as_str())) {
            graph.add_edge(a, b, ());
        }
    }
    toposort(&graph, None)
        .map(|order| order.into_iter().map(|i| graph[i]).collect())
        .map_err(|cycle| graph[cycle.node_id()])
}

fn check_acyclic<'n>(net: &'n Network, out: &mut Collector) -> Option<Vec<&'n str>> {
    match topological_order(net) {
        Ok(order) => Some(order),
        Err(node) => {
            out.error(DiagnosticCode::Cycle, node, "network must be acyclic; a cycle passes through this node");
            None
        }
    }
}

/// Counts distinct source paths per (port, line); any merge of two live paths
/// breaks the one-path-per-line rule.
fn check_line_trees(net: &Network, order: &[&str], out: &mut Collector) {
    let mut counter = PathCounter::default();
    for &id in order {
        let node = &net.nodes[id];
        match &node.kind {
            NodeKind::Source(s) => {
                for line in s.lines.keys() {
                    counter.add((PortRef::new(id, SOURCE_PORT), *line), 1, out);
                }
            }
            NodeKind::Component(c) => {
                let Some(spec) = net.catalog.components.get(&c.component) else { continue };
                for t in &spec.transfers {
                    for line in t.curves.keys() {
                        let n = counter.get(&(PortRef::new(id, &t.from), *line));
                        counter.add((PortRef::new(id, &t.to), *line), n, out);
                    }
                }
            }
            NodeKind::Output(o) => {
                let declared: BTreeSet<SignalLine> = net.inbound(id).flat_map(|e| e.lines.iter().copied()).collect();
                for line in declared.iter().chain(o.port_kind.required_lines()).collect::<BTreeSet<_>>() {
                    let n = counter.get(&(PortRef::new(id, OUTPUT_PORT), *line));
                    if n == 0 {
                        out.warn(DiagnosticCode::LineNotDelivered, id, format!("{line} does not reach this output"));
                    }
                }
            }
        }
        for e in net.outbound(id) {
            for line in &e.lines {
                let n = counter.get(&(e.from.clone(), *line));
                counter.add((e.to.clone(), *line), n, out);
            }
        }
    }
}

#[derive(Default)]
struct PathCounter {
    paths: BTreeMap<(PortRef, SignalLine), u64>,
    feeders: BTreeMap<(PortRef, SignalLine), u32>,
    reported: BTreeSet<(PortRef, SignalLine)>,
}

impl PathCounter {
    fn get(&self, key: &(PortRef, SignalLine)) -> u64 {
        self.paths.get(key).copied().unwrap_or(0)
    }

    fn add(&mut self, key: (PortRef, SignalLine), n: u64, out: &mut Collector) {
        if n == 0 {
            return;
        }
        *self.paths.entry(key.clone()).or_default() += n;
        let feeders = self.feeders.entry(key.clone()).or_default();
        *feeders += 1;
        if *feeders > 1 && self.reported.insert(key.clone()) {
            out.error(
                DiagnosticCode::AmbiguousPath,
                key.0.to_string(),
                format!("{} reaches this port along more than one path", key.1),
            );
        }
    }
}
