//! Outlet windows, C/N floors, overload ceilings and tap isolation.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::catalog::{Catalog, ComponentClass, ComponentSpec, PortDirection};
use crate::engine::{power_to_level, LineSummary, OutputSummary, SimulationResult};
use crate::model::{DesignConstraints, Network, NodeId, OutputKind, PortRef, OUTPUT_PORT};
use crate::units::{PowerDbm, SignalLine};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    LevelLow,
    LevelHigh,
    CnrLow,
    Overload,
    IsolationLow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Unit {
    #[serde(rename = "dBuV")]
    DbUv,
    #[serde(rename = "dB")]
    Db,
}

impl Unit {
    pub fn as_str(self) -> &'static str {
        match self {
            Unit::DbUv => "dBuV",
            Unit::Db => "dB",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Violation {
    pub node: NodeId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub port: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub line: Option<SignalLine>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub freq_mhz: Option<f64>,
    pub kind: ViolationKind,
    /// `None` when the required line never arrives.
    pub measured: Option<f64>,
    pub limit: f64,
    pub unit: Unit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputVerdict {
    pub output: NodeId,
    pub kind: OutputKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub floor: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub apartment: Option<u32>,
    pub pass: bool,
    /// Smallest distance to any limit over the checked lines; negative when failing.
    pub margin_db: f64,
    pub lines: BTreeMap<SignalLine, LineSummary>,
    pub violations: Vec<Violation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComplianceReport {
    pub outputs: Vec<OutputVerdict>,
    /// Overload and isolation findings; these do not change output counts.
    pub component_violations: Vec<Violation>,
    pub outputs_within: usize,
    pub outputs_outside: usize,
    pub total_margin_db: f64,
}

impl ComplianceReport {
    pub fn total_outputs(&self) -> usize {
        self.outputs.len()
    }

    pub fn violation_count(&self) -> usize {
        self.component_violations.len() + self.outputs.iter().map(|o| o.violations.len()).sum::<usize>()
    }

    pub fn is_clean(&self) -> bool {
        self.violation_count() == 0
    }

    pub fn verdict(&self, output: &str) -> Option<&OutputVerdict> {
        self.outputs.iter().find(|o| o.output == output)
    }
}

/// Checks every output of `result` against the band windows and C/N floors.
/// SAT receiver outlets must carry all four SAT lines; any further line they
/// receive (terrestrial on combined ports) is checked as well.
pub fn check_outputs(result: &SimulationResult, constraints: &DesignConstraints) -> ComplianceReport {
    let mut outputs = Vec::with_capacity(result.outputs.len());
    for (id, summary) in &result.outputs {
        let mut violations = Vec::new();
        let margin = assess(result, constraints, id, summary, &mut |make| violations.push(make()));
        outputs.push(OutputVerdict {
            output: id.clone(),
            kind: summary.kind,
            floor: summary.floor,
            apartment: summary.apartment,
            pass: violations.is_empty(),
            margin_db: margin,
            lines: summary.lines.clone(),
            violations,
        });
    }

    let outputs_within = outputs.iter().filter(|o| o.pass).count();
    ComplianceReport {
        outputs_outside: outputs.len() - outputs_within,
        outputs_within,
        total_margin_db: outputs.iter().map(|o| o.margin_db).sum(),
        outputs,
        component_violations: Vec::new(),
    }
}

/// Counts and total margin of [`check_outputs`] without building the report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutputScore {
    pub outputs_within: usize,
    pub outputs_outside: usize,
    pub total_margin_db: f64,
}

pub fn score_outputs(result: &SimulationResult, constraints: &DesignConstraints) -> OutputScore {
    let mut score = OutputScore { outputs_within: 0, outputs_outside: 0, total_margin_db: 0.0 };
    for (id, summary) in &result.outputs {
        let mut failed = false;
        score.total_margin_db += assess(result, constraints, id, summary, &mut |_| failed = true);
        if failed {
            score.outputs_outside += 1;
        } else {
            score.outputs_within += 1;
        }
    }
    score
}

/// Checks one outlet and returns its margin. `report` receives a constructor
/// per violation, so callers that only count never allocate.
fn assess(
    result: &SimulationResult,
    constraints: &DesignConstraints,
    id: &str,
    summary: &OutputSummary,
    report: &mut dyn FnMut(&dyn Fn() -> Violation),
) -> f64 {
    let mut margin = f64::INFINITY;
    let violation = |line: SignalLine, freq_mhz, kind, measured, limit, unit| Violation {
        node: id.to_string(),
        port: Some(OUTPUT_PORT.to_string()),
        line: Some(line),
        freq_mhz,
        kind,
        measured,
        limit,
        unit,
    };

    for line in summary.kind.required_lines() {
        if !summary.lines.contains_key(line) {
            let limit = constraints.band(line.band()).level_min_dbuv;
            report(&|| violation(*line, None, ViolationKind::LevelLow, None, limit, Unit::DbUv));
            margin = f64::NEG_INFINITY;
        }
    }

    for (line, s) in &summary.lines {
        let limits = constraints.band(line.band());
        let Some(trace) = result.output_trace(id, *line) else { continue };
        let grid = result.grid.line(*line);
        for (f, level) in grid.iter().zip(&trace.levels_dbuv) {
            let (kind, limit) = if *level < limits.level_min_dbuv {
                (ViolationKind::LevelLow, limits.level_min_dbuv)
            } else if *level > limits.level_max_dbuv {
                (ViolationKind::LevelHigh, limits.level_max_dbuv)
            } else {
                continue;
            };
            report(&|| violation(*line, Some(f.value()), kind, Some(*level), limit, Unit::DbUv));
        }
        margin = margin
            .min(s.min_level_dbuv - limits.level_min_dbuv)
            .min(limits.level_max_dbuv - s.max_level_dbuv);
        if let Some(cn) = s.worst_cnr_db.db() {
            margin = margin.min(cn - limits.min_cnr_db);
            if cn < limits.min_cnr_db {
                let at = s.worst_cnr_mhz;
                report(&|| violation(*line, at, ViolationKind::CnrLow, Some(cn), limits.min_cnr_db, Unit::Db));
            }
        }
    }
    if margin.is_finite() {
        margin
    } else {
        0.0
    }
}

/// Output ports of rated components whose level exceeds the per-channel
/// ceiling implied by the rating and the channel count of the line's source.
pub fn check_overload(net: &Network, result: &SimulationResult) -> Vec<Violation> {
    let mut out = Vec::new();
    for (id, node) in &net.nodes {
        let Some(comp) = node.component() else { continue };
        let Some(spec) = net.catalog.components.get(&comp.component) else { continue };
        let Some(rating) = spec.max_output_power_dbm else { continue };
        for port in spec.ports.iter().filter(|p| p.direction == PortDirection::Out) {
            let Some(lines) = result.traces.get(&PortRef::new(id.as_str(), port.id.as_str())) else { continue };
            for (line, trace) in lines {
                let n = net
                    .nodes
                    .get(&trace.source)
                    .and_then(|n| n.source())
                    .map_or(0, |s| s.channel_plan.count(*line));
                if n == 0 {
                    continue;
                }
                let limit = power_to_level(PowerDbm(rating), n as u32);
                let worst = trace
                    .levels_dbuv
                    .iter()
                    .enumerate()
                    .fold((0, f64::NEG_INFINITY), |acc, (i, l)| if *l > acc.1 { (i, *l) } else { acc });
                if worst.1 > limit {
                    out.push(Violation {
                        node: id.clone(),
                        port: Some(port.id.clone()),
                        line: Some(*line),
                        freq_mhz: Some(result.grid.line(*line)[worst.0].value()),
                        kind: ViolationKind::Overload,
                        measured: Some(worst.1),
                        limit,
                        unit: Unit::DbUv,
                    });
                }
            }
        }
    }
    out
}

fn isolation_shortfall(spec: &ComponentSpec, min_db: f64) -> Option<f64> {
    let checked = spec.class == ComponentClass::Tap || spec.class.is_multiswitch();
    spec.tap_isolation_db.filter(|iso| checked && *iso < min_db)
}

/// Taps and multiswitches placed in `net` whose catalog isolation is below
/// the configured minimum.
pub fn check_isolation(net: &Network) -> Vec<Violation> {
    let min_db = net.constraints.min_tap_isolation_db;
    net.nodes
        .iter()
        .filter_map(|(id, n)| Some((id, net.catalog.components.get(&n.component()?.component)?)))
        .filter_map(|(id, spec)| {
            isolation_shortfall(spec, min_db).map(|iso| Violation {
                node: id.clone(),
                port: None,
                line: None,
                freq_mhz: None,
                kind: ViolationKind::IsolationLow,
                measured: Some(iso),
                limit: min_db,
                unit: Unit::Db,
            })
        })
        .collect()
}

/// Catalog entries that would fail the isolation check if placed.
pub fn catalog_isolation_shortfalls(catalog: &Catalog, min_db: f64) -> Vec<(String, f64)> {
    catalog
        .components
        .values()
        .filter_map(|s| isolation_shortfall(s, min_db).map(|iso| (s.id.clone(), iso)))
        .collect()
}

/// Full report: output verdicts plus component-level findings.
pub fn evaluate(net: &Network, result: &SimulationResult) -> ComplianceReport {
    let mut report = check_outputs(result, &net.constraints);
    if net.constraints.overload_check {
        report.component_violations.extend(check_overload(net, result));
    }
    report.component_violations.extend(check_isolation(net));
    report
}
