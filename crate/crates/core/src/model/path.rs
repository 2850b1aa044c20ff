use serde::Serialize;
use thiserror::Error;

use super::{EdgeId, Network, NodeId, NodeKind, PortRef, OUTPUT_PORT, SOURCE_PORT};
use crate::units::SignalLine;

/// One element of a source-to-output route.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "hop", rename_all = "snake_case")]
pub enum Hop {
    Source { node: NodeId, port: String },
    Edge { edge: EdgeId },
    Component { node: NodeId, in_port: String, out_port: String },
    Output { node: NodeId, port: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PathError {
    #[error("'{0}' is not an output node")]
    UnknownOutput(String),
    #[error("{line} does not reach output '{output}'")]
    NotReachable { output: String, line: SignalLine },
    #[error("{line} reaches output '{output}' along more than one path")]
    AmbiguousPath { output: String, line: SignalLine },
}

/// The unique route `line` takes from its source to `output`, source first.
pub fn line_path(net: &Network, output: &str, line: SignalLine) -> Result<Vec<Hop>, PathError> {
    match net.nodes.get(output).map(|n| &n.kind) {
        Some(NodeKind::Output(_)) => {}
        _ => return Err(PathError::UnknownOutput(output.to_string())),
    }
    let mut found = Vec::new();
    let mut stack = vec![Hop::Output {
        node: output.to_string(),
        port: OUTPUT_PORT.to_string(),
    }];
    let mut visiting = vec![output.to_string()];
    walk_back(net, &PortRef::new(output, OUTPUT_PORT), line, &mut stack, &mut visiting, &mut found);
    match found.len() {
        0 => Err(PathError::NotReachable { output: output.to_string(), line }),
        1 => {
            let mut path = found.pop().unwrap();
            path.reverse();
            Ok(path)
        }
        _ => Err(PathError::AmbiguousPath { output: output.to_string(), line }),
    }
}

/// Depth-first search backwards from an in-port; stops once two routes are known.
fn walk_back(
    net: &Network,
    in_port: &PortRef,
    line: SignalLine,
    stack: &mut Vec<Hop>,
    visiting: &mut Vec<NodeId>,
    found: &mut Vec<Vec<Hop>>,
) {
    for edge in net.edges.values() {
        if found.len() > 1 {
            return;
        }
        if edge.to != *in_port || !edge.lines.contains(&line) {
            continue;
        }
        let from = &edge.from;
        let Some(node) = net.nodes.get(&from.node) else { continue };
        if visiting.contains(&from.node) {
            continue;
        }
        stack.push(Hop::Edge { edge: edge.id.clone() });
        match &node.kind {
            NodeKind::Source(s) => {
                if from.port == SOURCE_PORT && s.lines.contains_key(&line) {
                    let mut route = stack.clone();
                    route.push(Hop::Source { node: from.node.clone(), port: from.port.clone() });
                    found.push(route);
                }
            }
            NodeKind::Component(c) => {
                if let Some(spec) = net.catalog.components.get(&c.component) {
                    visiting.push(from.node.clone());
                    for t in spec.transfers.iter().filter(|t| t.to == from.port && t.curves.contains_key(&line)) {
                        stack.push(Hop::Component {
                            node: from.node.clone(),
                            in_port: t.from.clone(),
                            out_port: t.to.clone(),
                        });
                        walk_back(net, &PortRef::new(&from.node, &t.from), line, stack, visiting, found);
                        stack.pop();
                    }
                    visiting.pop();
                }
            }
            NodeKind::Output(_) => {}
        }
        stack.pop();
    }
}
