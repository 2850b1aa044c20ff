use serde::{Deserialize, Serialize};

use crate::model::{line_path, Hop, Network, NodeId, PathError};
use crate::scenario::{RegulatorRef, Scenario};
use crate::units::SignalLine;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "knob", rename_all = "snake_case")]
pub enum Knob {
    Regulator { node: NodeId, group: String },
    SourceTrim { node: NodeId, line: SignalLine },
}

/// Level change at the output, in dB, for one step of a knob.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KnobEffect {
    pub knob: Knob,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub index: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub positions: Option<usize>,
    /// `None` at the top of the range.
    pub step_up_db: Option<f64>,
    /// `None` at the bottom of the range.
    pub step_down_db: Option<f64>,
}

/// Knobs on the route of `line` to `output`, source first. Levels are linear
/// in every regulator offset, so a step's effect is the position difference.
pub fn sensitivity(
    net: &Network,
    scenario: &Scenario,
    output: &str,
    line: SignalLine,
) -> Result<Vec<KnobEffect>, PathError> {
    let mut out = Vec::new();
    for hop in line_path(net, output, line)? {
        match hop {
            Hop::Source { node, .. } => out.push(KnobEffect {
                knob: Knob::SourceTrim { node, line },
                index: None,
                positions: None,
                step_up_db: Some(1.0),
                step_down_db: Some(-1.0),
            }),
            Hop::Component { node, in_port, out_port } => {
                let Some(spec) = net.nodes[&node].component().and_then(|c| net.catalog.components.get(&c.component))
                else {
                    continue;
                };
                let regulated = spec
                    .transfers
                    .iter()
                    .any(|t| t.from == in_port && t.to == out_port && t.regulated && t.curves.contains_key(&line));
                let Some((group, reg)) = spec.regulator_for(line).filter(|_| regulated) else { continue };
                let r = RegulatorRef { node: node.clone(), group: group.to_string() };
                let i = scenario.regulator_index(net, &r).unwrap_or(reg.current_index);
                let p = &reg.positions_db;
                out.push(KnobEffect {
                    knob: Knob::Regulator { node, group: r.group },
                    index: Some(i),
                    positions: Some(p.len()),
                    step_up_db: p.get(i + 1).map(|next| next - p[i]),
                    step_down_db: i.checked_sub(1).map(|prev| p[prev] - p[i]),
                });
            }
            Hop::Edge { .. } | Hop::Output { .. } => {}
        }
    }
    Ok(out)
}
