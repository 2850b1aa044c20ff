//! Knob settings applied on top of a network: regulator positions and source trims.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Network, NodeId};
use crate::units::SignalLine;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("scenario references unknown component node '{0}'")]
    UnknownNode(String),
    #[error("node '{node}' has no regulator '{group}'")]
    UnknownRegulator { node: String, group: String },
    #[error("node '{node}' regulator '{group}': index {index} outside 0..{len}")]
    IndexOutOfRange {
        node: String,
        group: String,
        index: usize,
        len: usize,
    },
    #[error("scenario trims unknown source line {node}/{line}")]
    UnknownSourceLine { node: String, line: SignalLine },
    #[error("non-finite trim on {node}/{line}")]
    NonFiniteTrim { node: String, line: SignalLine },
}

/// Identifies one regulator on one component node.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RegulatorRef {
    pub node: NodeId,
    pub group: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    /// node -> regulator group -> position index
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub regulators: BTreeMap<NodeId, BTreeMap<String, usize>>,
    /// source node -> line -> level offset in dB
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub source_trims_db: BTreeMap<NodeId, BTreeMap<SignalLine, f64>>,
}

impl Scenario {
    pub fn set_regulator(&mut self, r: &RegulatorRef, index: usize) {
        self.regulators.entry(r.node.clone()).or_default().insert(r.group.clone(), index);
    }

    pub fn set_trim(&mut self, node: &str, line: SignalLine, db: f64) {
        self.source_trims_db.entry(node.to_string()).or_default().insert(line, db);
    }

    pub fn trim(&self, node: &str, line: SignalLine) -> f64 {
        self.source_trims_db
            .get(node)
            .and_then(|m| m.get(&line))
            .copied()
            .unwrap_or(0.0)
    }

    /// `other` wins wherever both set a value.
    pub fn merged(&self, other: &Scenario) -> Scenario {
        let mut out = self.clone();
        for (node, groups) in &other.regulators {
            out.regulators.entry(node.clone()).or_default().extend(groups.clone());
        }
        for (node, trims) in &other.source_trims_db {
            out.source_trims_db.entry(node.clone()).or_default().extend(trims.clone());
        }
        out
    }

    /// Position of `r`: scenario, else the node's stored index, else the catalog default.
    pub fn regulator_index(&self, net: &Network, r: &RegulatorRef) -> Option<usize> {
        if let Some(i) = self.regulators.get(&r.node).and_then(|g| g.get(&r.group)) {
            return Some(*i);
        }
        let comp = net.nodes.get(&r.node)?.component()?;
        if let Some(i) = comp.regulators.get(&r.group) {
            return Some(*i);
        }
        Some(net.catalog.components.get(&comp.component)?.regulators.get(&r.group)?.current_index)
    }

    /// Effective index per regulator group for one component node.
    pub fn indices_for(&self, net: &Network, node: &str) -> BTreeMap<String, usize> {
        let mut out = BTreeMap::new();
        if let Some(comp) = net.nodes.get(node).and_then(|n| n.component()) {
            out.extend(comp.regulators.clone());
        }
        if let Some(g) = self.regulators.get(node) {
            out.extend(g.clone());
        }
        out
    }

    pub fn validate(&self, net: &Network) -> Result<(), ScenarioError> {
        for (node, groups) in &self.regulators {
            let spec = net
                .nodes
                .get(node)
                .and_then(|n| n.component())
                .and_then(|c| net.catalog.components.get(&c.component))
                .ok_or_else(|| ScenarioError::UnknownNode(node.clone()))?;
            for (group, &index) in groups {
                let reg = spec.regulators.get(group).ok_or_else(|| ScenarioError::UnknownRegulator {
                    node: node.clone(),
                    group: group.clone(),
                })?;
                if index >= reg.len() {
                    return Err(ScenarioError::IndexOutOfRange {
                        node: node.clone(),
                        group: group.clone(),
                        index,
                        len: reg.len(),
                    });
                }
            }
        }
        for (node, trims) in &self.source_trims_db {
            let src = net.nodes.get(node).and_then(|n| n.source());
            for (line, db) in trims {
                if !src.is_some_and(|s| s.lines.contains_key(line)) {
                    return Err(ScenarioError::UnknownSourceLine { node: node.clone(), line: *line });
                }
                if !db.is_finite() {
                    return Err(ScenarioError::NonFiniteTrim { node: node.clone(), line: *line });
                }
            }
        }
        Ok(())
    }
}

/// Every regulator of every component node, in node-id then group order.
pub fn regulators(net: &Network) -> Vec<RegulatorRef> {
    net.nodes
        .iter()
        .filter_map(|(id, n)| n.component().map(|c| (id, c)))
        .filter_map(|(id, c)| net.catalog.components.get(&c.component).map(|spec| (id, spec)))
        .flat_map(|(id, spec)| {
            spec.regulators.keys().map(move |group| RegulatorRef {
                node: id.clone(),
                group: group.clone(),
            })
        })
        .collect()
}
