use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{canonical_json, from_json, NetioError, FORMAT_VERSION};
use crate::catalog::{CableSpec, Catalog, CatalogDocument, ComponentSpec, CATALOG_FORMAT_VERSION};
use crate::model::validate::has_errors;
use crate::model::{
    validate_network, CatalogBase, ChannelPlan, ComponentNode, DesignConstraints, Diagnostic, Edge, FrequencyGrid,
    Network, Node, NodeKind, OutputKind, OutputNode, PortRef, SourceLine, SourceNode,
};
use crate::scenario::Scenario;
use crate::units::SignalLine;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CatalogSection {
    #[serde(default)]
    base: CatalogBase,
    /// Added to the base, replacing entries with the same id.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    components: Vec<ComponentSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    cables: Vec<CableSpec>,
}

impl Default for CatalogSection {
    fn default() -> Self {
        Self { base: CatalogBase::Builtin, components: Vec::new(), cables: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
enum NodeDoc {
    Source {
        id: String,
        lines: BTreeMap<SignalLine, SourceLine>,
        #[serde(default, skip_serializing_if = "ChannelPlan::is_empty")]
        channel_plan: ChannelPlan,
    },
    Component {
        id: String,
        component: String,
        #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
        regulators: BTreeMap<String, usize>,
    },
    Output {
        id: String,
        port_kind: OutputKind,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        floor: Option<u32>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        apartment: Option<u32>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeDoc {
    id: String,
    from: PortRef,
    to: PortRef,
    cable: String,
    length_m: f64,
    lines: BTreeSet<SignalLine>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetworkDocument {
    format_version: u32,
    #[serde(default)]
    catalog: CatalogSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    grid: Option<FrequencyGrid>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    constraints: Option<DesignConstraints>,
    nodes: Vec<NodeDoc>,
    #[serde(default)]
    edges: Vec<EdgeDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    scenario: Option<Scenario>,
}

/// A parsed network file. `warnings` holds non-blocking diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedNetwork {
    pub network: Network,
    pub scenario: Option<Scenario>,
    pub warnings: Vec<Diagnostic>,
}

impl ParsedNetwork {
    pub fn scenario_or_default(&self) -> Scenario {
        self.scenario.clone().unwrap_or_default()
    }
}

/// Parses and validates a network document. Unknown fields anywhere are
/// rejected; references to missing catalog entries are schema errors.
pub fn parse_network(text: &str) -> Result<ParsedNetwork, NetioError> {
    let doc: NetworkDocument = from_json(text)?;
    if doc.format_version != FORMAT_VERSION {
        return Err(NetioError::Schema(format!("unsupported format_version {}", doc.format_version)));
    }

    let mut net = Network::new(doc.catalog.base);
    net.catalog
        .extend(doc.catalog.components, doc.catalog.cables)
        .map_err(|e| NetioError::Schema(format!("catalog: {e}")))?;
    if let Some(grid) = doc.grid {
        net.grid = grid;
    }
    if let Some(c) = doc.constraints {
        net.constraints = c;
    }

    for node in doc.nodes {
        let (id, kind) = match node {
            NodeDoc::Source { id, lines, channel_plan } => (id, NodeKind::Source(SourceNode { lines, channel_plan })),
            NodeDoc::Component { id, component, regulators } => {
                if !net.catalog.components.contains_key(&component) {
                    return Err(NetioError::Schema(format!("node '{id}' references unknown component '{component}'")));
                }
                (id, NodeKind::Component(ComponentNode { component, regulators }))
            }
            NodeDoc::Output { id, port_kind, floor, apartment } => {
                (id, NodeKind::Output(OutputNode { port_kind, floor, apartment }))
            }
        };
        if net.nodes.contains_key(&id) {
            return Err(NetioError::Schema(format!("duplicate node id '{id}'")));
        }
        net.nodes.insert(id.clone(), Node { id, kind });
    }

    for e in doc.edges {
        if !net.catalog.cables.contains_key(&e.cable) {
            return Err(NetioError::Schema(format!("edge '{}' references unknown cable '{}'", e.id, e.cable)));
        }
        if net.edges.contains_key(&e.id) {
            return Err(NetioError::Schema(format!("duplicate edge id '{}'", e.id)));
        }
        net.edges.insert(
            e.id.clone(),
            Edge { id: e.id, from: e.from, to: e.to, cable: e.cable, length_m: e.length_m, lines: e.lines },
        );
    }

    let diags = validate_network(&net);
    if has_errors(&diags) {
        return Err(NetioError::Validation(diags));
    }
    if let Some(sc) = &doc.scenario {
        sc.validate(&net).map_err(|e| NetioError::Schema(format!("scenario: {e}")))?;
    }
    Ok(ParsedNetwork { network: net, scenario: doc.scenario, warnings: diags })
}

/// Canonical text: sorted keys, nodes and edges in id order, defaults left out.
pub fn serialize_network(net: &Network, scenario: Option<&Scenario>) -> String {
    let base = net.catalog_base.catalog();
    let components = net
        .catalog
        .components
        .values()
        .filter(|c| base.components.get(&c.id) != Some(*c))
        .cloned()
        .collect();
    let cables = net
        .catalog
        .cables
        .values()
        .filter(|c| base.cables.get(&c.id) != Some(*c))
        .cloned()
        .collect();

    let nodes = net
        .nodes
        .values()
        .map(|n| match &n.kind {
            NodeKind::Source(s) => NodeDoc::Source {
                id: n.id.clone(),
                lines: s.lines.clone(),
                channel_plan: s.channel_plan.clone(),
            },
            NodeKind::Component(c) => NodeDoc::Component {
                id: n.id.clone(),
                component: c.component.clone(),
                regulators: c.regulators.clone(),
            },
            NodeKind::Output(o) => NodeDoc::Output {
                id: n.id.clone(),
                port_kind: o.port_kind,
                floor: o.floor,
                apartment: o.apartment,
            },
        })
        .collect();
    let edges = net
        .edges
        .values()
        .map(|e| EdgeDoc {
            id: e.id.clone(),
            from: e.from.clone(),
            to: e.to.clone(),
            cable: e.cable.clone(),
            length_m: e.length_m,
            lines: e.lines.clone(),
        })
        .collect();

    let doc = NetworkDocument {
        format_version: FORMAT_VERSION,
        catalog: CatalogSection { base: net.catalog_base, components, cables },
        grid: (net.grid != FrequencyGrid::default()).then(|| net.grid.clone()),
        constraints: (net.constraints != DesignConstraints::default()).then_some(net.constraints),
        nodes,
        edges,
        scenario: scenario.cloned(),
    };
    canonical_json(&doc)
}

/// Parses a standalone catalog file.
pub fn parse_catalog(text: &str) -> Result<Catalog, NetioError> {
    let doc: CatalogDocument = from_json(text)?;
    if doc.format_version != CATALOG_FORMAT_VERSION {
        return Err(NetioError::Schema(format!("unsupported format_version {}", doc.format_version)));
    }
    doc.into_catalog().map_err(|e| NetioError::Schema(e.to_string()))
}

pub fn serialize_catalog(catalog: &Catalog) -> String {
    canonical_json(&CatalogDocument::from_catalog(catalog))
}

/// Parses a scenario object (`regulators`, `source_trims_db`) and checks it
/// against `net`.
pub fn parse_scenario(text: &str, net: &Network) -> Result<Scenario, NetioError> {
    let sc: Scenario = from_json(text)?;
    sc.validate(net).map_err(|e| NetioError::Schema(e.to_string()))?;
    Ok(sc)
}
