use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::OptimizeError;
use crate::compliance::score_outputs;
use crate::engine::Simulator;
use crate::model::{Network, NodeId, NodeKind, Spectrum};
use crate::scenario::Scenario;
use crate::units::SignalLine;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepRow {
    pub level_dbuv: f64,
    pub outputs_within: usize,
    pub outputs_outside: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepResult {
    pub line: SignalLine,
    pub source: NodeId,
    /// Requested levels, ascending.
    pub rows: Vec<SweepRow>,
    /// Lowest requested level with the highest count.
    pub argmax_level_dbuv: f64,
    /// 1 dB steps between the rows neighbouring the argmax.
    pub fine_rows: Vec<SweepRow>,
    /// Lowest and highest fine level reaching the fine maximum.
    pub optimum_interval_dbuv: [f64; 2],
}

/// The only source emitting `line`.
pub fn single_source(net: &Network, line: SignalLine) -> Result<NodeId, OptimizeError> {
    match net.sources_of(line).as_slice() {
        [one] => Ok((*one).clone()),
        [] => Err(OptimizeError::NoSource(line)),
        many => Err(OptimizeError::AmbiguousSource {
            line,
            sources: many.iter().map(|s| s.to_string()).collect(),
        }),
    }
}

/// Sets the source of `line` to a flat spectrum at each level in turn and
/// counts compliant outputs. Other knobs come from `scenario`; any trim on the
/// swept line is replaced.
pub fn sweep_input_level(
    net: &Network,
    scenario: &Scenario,
    line: SignalLine,
    levels: &[f64],
) -> Result<SweepResult, OptimizeError> {
    if levels.is_empty() {
        return Err(OptimizeError::EmptyLevels);
    }
    if let Some(bad) = levels.iter().find(|l| !l.is_finite()) {
        return Err(OptimizeError::InvalidLevel(*bad));
    }
    let source = single_source(net, line)?;

    // A 0 dBµV flat source lets the trim carry the swept level.
    let mut zeroed = net.clone();
    if let Some(NodeKind::Source(s)) = zeroed.nodes.get_mut(&source).map(|n| &mut n.kind) {
        if let Some(sl) = s.lines.get_mut(&line) {
            sl.spectrum = Spectrum::flat(line.band(), 0.0);
        }
    }
    let sim = Simulator::new(&zeroed)?;

    let mut sorted = levels.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    let rows = run_rows(&sim, scenario, &source, line, &sorted)?;

    let best = rows.iter().map(|r| r.outputs_within).max().unwrap_or(0);
    let i = rows.iter().position(|r| r.outputs_within == best).unwrap_or(0);
    let lo = rows[i.saturating_sub(1)].level_dbuv;
    let hi = rows[(i + 1).min(rows.len() - 1)].level_dbuv;
    let fine_levels: Vec<f64> = (0..).map(|k| lo + k as f64).take_while(|l| *l <= hi + 1e-9).collect();
    let fine_rows = run_rows(&sim, scenario, &source, line, &fine_levels)?;
    let fine_best = fine_rows.iter().map(|r| r.outputs_within).max().unwrap_or(0);
    let hull: Vec<f64> = fine_rows
        .iter()
        .filter(|r| r.outputs_within == fine_best)
        .map(|r| r.level_dbuv)
        .collect();

    Ok(SweepResult {
        line,
        source,
        argmax_level_dbuv: rows[i].level_dbuv,
        optimum_interval_dbuv: [hull[0], hull[hull.len() - 1]],
        rows,
        fine_rows,
    })
}

fn run_rows(
    sim: &Simulator<'_>,
    scenario: &Scenario,
    source: &str,
    line: SignalLine,
    levels: &[f64],
) -> Result<Vec<SweepRow>, OptimizeError> {
    levels
        .par_iter()
        .map(|level| {
            let mut sc = scenario.clone();
            sc.set_trim(source, line, *level);
            let result = sim.run_outputs(&sc)?;
            let report = score_outputs(&result, &sim.network().constraints);
            Ok(SweepRow {
                level_dbuv: *level,
                outputs_within: report.outputs_within,
                outputs_outside: report.outputs_outside,
            })
        })
        .collect()
}
