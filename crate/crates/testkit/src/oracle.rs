//! Reference computations that share no code with the engine beyond the
//! data types: a per-output path sum and an exhaustive regulator search.

use smatv_core::compliance::score_outputs;
use smatv_core::model::{Network, NodeKind, PortRef};
use smatv_core::scenario::{regulators, Scenario};
use smatv_core::engine::Simulator;
use smatv_core::SignalLine;

/// Linear interpolation through `(x, y)` points, held flat outside them.
fn lerp(points: &[(f64, f64)], x: f64) -> f64 {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    if x <= pts[0].0 {
        return pts[0].1;
    }
    for w in pts.windows(2) {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        if x <= x1 {
            return y0 + (y1 - y0) * (x - x0) / (x1 - x0);
        }
    }
    pts[pts.len() - 1].1
}

/// Two-anchor cable through `a + b * sqrt(f)`.
fn cable_db(net: &Network, cable: &str, f: f64, length_m: f64) -> f64 {
    let anchors = &net.catalog.cables[cable].anchors;
    assert_eq!(anchors.len(), 2, "oracle handles two-anchor cables only");
    let (x1, y1) = (anchors[0].freq_mhz.value().sqrt(), anchors[0].db_per_100m);
    let (x2, y2) = (anchors[1].freq_mhz.value().sqrt(), anchors[1].db_per_100m);
    let b = (y2 - y1) / (x2 - x1);
    let a = y1 - b * x1;
    -(a + b * f.sqrt()) * length_m / 100.0
}

fn regulator_offset(net: &Network, scenario: &Scenario, node: &str, line: SignalLine) -> f64 {
    let comp = net.nodes[node].component().unwrap();
    let spec = &net.catalog.components[&comp.component];
    for (group, reg) in &spec.regulators {
        if reg.lines.contains(&line) {
            let index = scenario
                .regulators
                .get(node)
                .and_then(|g| g.get(group))
                .or_else(|| comp.regulators.get(group))
                .copied()
                .unwrap_or(reg.current_index);
            return reg.positions_db[index];
        }
    }
    0.0
}

/// Level of `line` entering `port` at frequency `f`, by walking back to the source.
fn level_into(net: &Network, scenario: &Scenario, port: &PortRef, line: SignalLine, f: f64) -> Option<f64> {
    let edge = net.edges.values().find(|e| e.to == *port && e.lines.contains(&line))?;
    let cable = cable_db(net, &edge.cable, f, edge.length_m);
    let from = &edge.from;
    let upstream = match &net.nodes[&from.node].kind {
        NodeKind::Source(s) => {
            let pts: Vec<(f64, f64)> =
                s.lines[&line].spectrum.anchors.iter().map(|a| (a.freq_mhz.value(), a.level_dbuv)).collect();
            let trim = scenario.source_trims_db.get(&from.node).and_then(|t| t.get(&line)).copied().unwrap_or(0.0);
            lerp(&pts, f) + trim
        }
        NodeKind::Component(c) => {
            let spec = &net.catalog.components[&c.component];
            let t = spec.transfers.iter().find(|t| t.to == from.port && t.curves.contains_key(&line))?;
            let pts: Vec<(f64, f64)> =
                t.curves[&line].anchors.iter().map(|a| (a.freq_mhz.value(), a.gain_db)).collect();
            let offset = if t.regulated { regulator_offset(net, scenario, &from.node, line) } else { 0.0 };
            level_into(net, scenario, &PortRef::new(from.node.as_str(), t.from.as_str()), line, f)? + lerp(&pts, f) + offset
        }
        NodeKind::Output(_) => return None,
    };
    Some(upstream + cable)
}

/// Per-grid-point levels of `line` at `output`, or `None` if it never arrives.
pub fn oracle_levels(net: &Network, scenario: &Scenario, output: &str, line: SignalLine) -> Option<Vec<f64>> {
    let port = PortRef::new(output, "in");
    net.grid
        .line(line)
        .iter()
        .map(|f| level_into(net, scenario, &port, line, f.value()))
        .collect()
}

/// Highest compliant-output count over every regulator assignment, by plain
/// odometer enumeration.
pub fn brute_force_best(net: &Network, start: &Scenario) -> usize {
    let regs = regulators(net);
    let dims: Vec<usize> = regs
        .iter()
        .map(|r| net.catalog.components[&net.nodes[&r.node].component().unwrap().component].regulators[&r.group].len())
        .collect();
    let sim = Simulator::new(net).expect("instance is valid");
    let mut idx = vec![0usize; regs.len()];
    let mut best = 0;
    loop {
        let mut sc = start.clone();
        for (r, i) in regs.iter().zip(&idx) {
            sc.regulators.entry(r.node.clone()).or_default().insert(r.group.clone(), *i);
        }
        let report = score_outputs(&sim.run_outputs(&sc).expect("instance simulates"), &net.constraints);
        best = best.max(report.outputs_within);

        let mut k = idx.len();
        loop {
            if k == 0 {
                return best;
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < dims[k] {
                break;
            }
            idx[k] = 0;
        }
    }
}
