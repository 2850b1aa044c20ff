//! Network graph, signal plans, frequency grid and design constraints.

mod path;
pub(crate) mod validate;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::catalog::{Catalog, PortDirection};
use crate::units::{interpolate, Band, Cnr, Frequency, SignalLine};

pub use path::{line_path, Hop, PathError};
pub use validate::{validate_network, Diagnostic, DiagnosticCode, Severity, MAX_DROP_LENGTH_M};

pub type NodeId = String;
pub type EdgeId = String;

/// Fixed port names for the implicit ports of source and output nodes.
pub const SOURCE_PORT: &str = "out";
pub const OUTPUT_PORT: &str = "in";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Channel {
    pub center_mhz: Frequency,
    pub bandwidth_mhz: f64,
    pub line: SignalLine,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ChannelPlan {
    pub channels: Vec<Channel>,
}

impl ChannelPlan {
    /// Evenly spaced channels starting at `first_mhz`.
    pub fn evenly_spaced(line: SignalLine, first_mhz: f64, spacing_mhz: f64, count: usize, bandwidth_mhz: f64) -> Self {
        let channels = (0..count)
            .map(|k| Channel {
                center_mhz: Frequency::mhz(first_mhz + spacing_mhz * k as f64).expect("channel inside (0, 3000] MHz"),
                bandwidth_mhz,
                line,
            })
            .collect();
        Self { channels }
    }

    pub fn is_empty(&self) -> bool {
        self.channels.is_empty()
    }

    /// Number of channels on `line` (the N of the per-channel level derating).
    pub fn count(&self, line: SignalLine) -> usize {
        self.channels.iter().filter(|c| c.line == line).count()
    }

    /// Transponder selection: keeps only the channels matching `keep`.
    pub fn select(&self, keep: impl Fn(&Channel) -> bool) -> ChannelPlan {
        ChannelPlan {
            channels: self.channels.iter().filter(|c| keep(c)).cloned().collect(),
        }
    }

    /// Channels whose occupied bandwidth leaves their line's band.
    #[allow(clippy::neg_cmp_op_on_partial_ord)] // NaN bandwidth counts as out of band
    pub fn out_of_band(&self) -> impl Iterator<Item = &Channel> {
        self.channels.iter().filter(|c| {
            let (lo, hi) = c.line.band().range_mhz();
            let half = c.bandwidth_mhz / 2.0;
            !(c.bandwidth_mhz > 0.0) || c.center_mhz.value() - half < lo || c.center_mhz.value() + half > hi
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumAnchor {
    pub freq_mhz: Frequency,
    pub level_dbuv: f64,
}

/// Source level over frequency, piecewise linear between anchors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Spectrum {
    pub anchors: Vec<SpectrumAnchor>,
}

impl Spectrum {
    pub fn flat(band: Band, level_dbuv: f64) -> Self {
        let (lo, hi) = band.range_mhz();
        Self {
            anchors: vec![
                SpectrumAnchor { freq_mhz: Frequency::mhz(lo).unwrap(), level_dbuv },
                SpectrumAnchor { freq_mhz: Frequency::mhz(hi).unwrap(), level_dbuv },
            ],
        }
    }

    pub fn level_at(&self, f: Frequency) -> Option<f64> {
        let pts: Vec<(f64, f64)> = self.anchors.iter().map(|a| (a.freq_mhz.value(), a.level_dbuv)).collect();
        interpolate(&pts, f.value())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceLine {
    pub spectrum: Spectrum,
    #[serde(default = "ideal", skip_serializing_if = "is_ideal")]
    pub cnr_db: Cnr,
}

fn ideal() -> Cnr {
    Cnr::Unconstrained
}

fn is_ideal(c: &Cnr) -> bool {
    *c == Cnr::Unconstrained
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceNode {
    pub lines: BTreeMap<SignalLine, SourceLine>,
    #[serde(default)]
    pub channel_plan: ChannelPlan,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentNode {
    pub component: String,
    /// Stored regulator positions; groups not listed use the catalog default.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub regulators: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputKind {
    /// SAT F-connector; the subscriber may select any of the four SAT lines.
    SatReceiver,
    /// Terrestrial TV connector.
    Tv,
}

impl OutputKind {
    pub fn supported_lines(self) -> BTreeSet<SignalLine> {
        match self {
            OutputKind::SatReceiver => SignalLine::ALL.into_iter().collect(),
            OutputKind::Tv => BTreeSet::from([SignalLine::Terr]),
        }
    }

    /// Lines the port must deliver to be usable.
    pub fn required_lines(self) -> &'static [SignalLine] {
        match self {
            OutputKind::SatReceiver => &SignalLine::SAT,
            OutputKind::Tv => &[SignalLine::Terr],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputNode {
    pub port_kind: OutputKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub floor: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub apartment: Option<u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum NodeKind {
    Source(SourceNode),
    Component(ComponentNode),
    Output(OutputNode),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: NodeId,
    pub kind: NodeKind,
}

impl Node {
    pub fn source(&self) -> Option<&SourceNode> {
        match &self.kind {
            NodeKind::Source(s) => Some(s),
            _ => None,
        }
    }

    pub fn component(&self) -> Option<&ComponentNode> {
        match &self.kind {
            NodeKind::Component(c) => Some(c),
            _ => None,
        }
    }

    pub fn output(&self) -> Option<&OutputNode> {
        match &self.kind {
            NodeKind::Output(o) => Some(o),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PortRef {
    pub node: NodeId,
    pub port: String,
}

impl PortRef {
    pub fn new(node: impl Into<String>, port: impl Into<String>) -> Self {
        Self { node: node.into(), port: port.into() }
    }
}

impl std::fmt::Display for PortRef {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}", self.node, self.port)
    }
}

/// A cable run; one edge may bundle several lines of the same cable type.
#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub id: EdgeId,
    pub from: PortRef,
    pub to: PortRef,
    pub cable: String,
    pub length_m: f64,
    pub lines: BTreeSet<SignalLine>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FrequencyGrid {
    pub points: BTreeMap<SignalLine, Vec<Frequency>>,
}

impl FrequencyGrid {
    pub fn stepped(start_mhz: f64, stop_mhz: f64, step_mhz: f64) -> Vec<Frequency> {
        let n = ((stop_mhz - start_mhz) / step_mhz + 1e-9).floor() as usize;
        (0..=n)
            .map(|k| Frequency::mhz(start_mhz + step_mhz * k as f64).expect("grid point in range"))
            .collect()
    }

    pub fn line(&self, line: SignalLine) -> &[Frequency] {
        self.points.get(&line).map(Vec::as_slice).unwrap_or(&[])
    }
}

impl Default for FrequencyGrid {
    /// Terrestrial every 8 MHz from 47 MHz, SAT IF every 25 MHz from 950 MHz.
    fn default() -> Self {
        let terr = Self::stepped(47.0, 862.0, 8.0);
        let sat = Self::stepped(950.0, 2150.0, 25.0);
        let mut points = BTreeMap::new();
        for line in SignalLine::ALL {
            let pts = if line == SignalLine::Terr { terr.clone() } else { sat.clone() };
            points.insert(line, pts);
        }
        Self { points }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandLimits {
    pub level_min_dbuv: f64,
    pub level_max_dbuv: f64,
    pub min_cnr_db: f64,
}

/// Isolation demanded between taps serving multichannel receivers in strict mode.
pub const STRICT_TAP_ISOLATION_DB: f64 = 40.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignConstraints {
    pub terrestrial: BandLimits,
    pub sat_if: BandLimits,
    pub min_tap_isolation_db: f64,
    /// Flag component outputs above the channel-count-derated maximum level.
    pub overload_check: bool,
}

impl DesignConstraints {
    pub fn band(&self, band: Band) -> &BandLimits {
        match band {
            Band::Terrestrial => &self.terrestrial,
            Band::SatIf => &self.sat_if,
        }
    }

    pub fn band_mut(&mut self, band: Band) -> &mut BandLimits {
        match band {
            Band::Terrestrial => &mut self.terrestrial,
            Band::SatIf => &mut self.sat_if,
        }
    }

    pub fn with_strict_isolation(mut self) -> Self {
        self.min_tap_isolation_db = STRICT_TAP_ISOLATION_DB;
        self
    }
}

impl Default for DesignConstraints {
    fn default() -> Self {
        Self {
            terrestrial: BandLimits { level_min_dbuv: 57.0, level_max_dbuv: 80.0, min_cnr_db: 57.0 },
            sat_if: BandLimits { level_min_dbuv: 47.0, level_max_dbuv: 77.0, min_cnr_db: 11.0 },
            min_tap_isolation_db: 20.0,
            overload_check: true,
        }
    }
}

/// Where a network's catalog starts from before its own additions.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CatalogBase {
    #[default]
    Builtin,
    Empty,
}

impl CatalogBase {
    pub fn catalog(self) -> Catalog {
        match self {
            CatalogBase::Builtin => crate::catalog::builtin_catalog(),
            CatalogBase::Empty => Catalog::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub nodes: BTreeMap<NodeId, Node>,
    pub edges: BTreeMap<EdgeId, Edge>,
    pub grid: FrequencyGrid,
    pub constraints: DesignConstraints,
    pub catalog_base: CatalogBase,
    /// Resolved catalog: the base plus any document-level additions.
    pub catalog: Catalog,
}

/// Direction and carried lines of a port, whatever kind of node owns it.
#[derive(Debug, Clone, PartialEq)]
pub struct PortInfo {
    pub direction: PortDirection,
    pub lines: BTreeSet<SignalLine>,
}

impl Network {
    pub fn new(catalog_base: CatalogBase) -> Self {
        Self {
            nodes: BTreeMap::new(),
            edges: BTreeMap::new(),
            grid: FrequencyGrid::default(),
            constraints: DesignConstraints::default(),
            catalog_base,
            catalog: catalog_base.catalog(),
        }
    }

    pub fn add_node(&mut self, id: impl Into<String>, kind: NodeKind) -> &mut Self {
        let id = id.into();
        self.nodes.insert(id.clone(), Node { id, kind });
        self
    }

    pub fn add_edge(
        &mut self,
        id: impl Into<String>,
        from: PortRef,
        to: PortRef,
        cable: &str,
        length_m: f64,
        lines: impl IntoIterator<Item = SignalLine>,
    ) -> &mut Self {
        let id = id.into();
        self.edges.insert(
            id.clone(),
            Edge {
                id,
                from,
                to,
                cable: cable.to_string(),
                length_m,
                lines: lines.into_iter().collect(),
            },
        );
        self
    }

    pub fn port_info(&self, port: &PortRef) -> Option<PortInfo> {
        let node = self.nodes.get(&port.node)?;
        match &node.kind {
            NodeKind::Source(s) if port.port == SOURCE_PORT => Some(PortInfo {
                direction: PortDirection::Out,
                lines: s.lines.keys().copied().collect(),
            }),
            NodeKind::Output(o) if port.port == OUTPUT_PORT => Some(PortInfo {
                direction: PortDirection::In,
                lines: o.port_kind.supported_lines(),
            }),
            NodeKind::Component(c) => {
                let spec = self.catalog.components.get(&c.component)?.port(&port.port)?;
                Some(PortInfo { direction: spec.direction, lines: spec.lines.clone() })
            }
            _ => None,
        }
    }

    pub fn outputs(&self) -> impl Iterator<Item = (&NodeId, &OutputNode)> {
        self.nodes.iter().filter_map(|(id, n)| n.output().map(|o| (id, o)))
    }

    pub fn inbound(&self, node: &str) -> impl Iterator<Item = &Edge> {
        let node = node.to_string();
        self.edges.values().filter(move |e| e.to.node == node)
    }

    pub fn outbound(&self, node: &str) -> impl Iterator<Item = &Edge> {
        let node = node.to_string();
        self.edges.values().filter(move |e| e.from.node == node)
    }

    /// Source nodes emitting `line`.
    pub fn sources_of(&self, line: SignalLine) -> Vec<&NodeId> {
        self.nodes
            .iter()
            .filter(|(_, n)| n.source().is_some_and(|s| s.lines.contains_key(&line)))
            .map(|(id, _)| id)
            .collect()
    }
}
