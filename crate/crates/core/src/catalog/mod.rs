//! Component and cable models.
//!
//! Every transfer path of a component is a piecewise-linear gain curve per
//! signal line. Discrete gain regulators add a frequency-independent offset to
//! the regulated paths of the lines they control. Cable loss follows
//! `A(f) = a + b * sqrt(f)` dB per 100 m, fitted through the datasheet anchors.

mod builtin;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::units::{interpolate, Band, Frequency, SignalLine};

pub use builtin::{builtin_catalog, CatalogDocument, CATALOG_FORMAT_VERSION};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CatalogError {
    #[error("unknown component '{0}'")]
    UnknownComponent(String),
    #[error("unknown cable '{0}'")]
    UnknownCable(String),
    #[error("component '{component}' has no regulator '{group}'")]
    UnknownRegulator { component: String, group: String },
    #[error("regulator '{group}' of '{component}': index {index} out of range 0..{len}")]
    RegulatorIndexOutOfRange {
        component: String,
        group: String,
        index: usize,
        len: usize,
    },
    #[error("frequency {0} is outside every distribution band")]
    FrequencyOutOfRange(f64),
    #[error("duplicate id '{0}' in catalog")]
    DuplicateId(String),
    #[error("component '{component}': {reason}")]
    InvalidComponent { component: String, reason: String },
    #[error("cable '{cable}': {reason}")]
    InvalidCable { cable: String, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComponentClass {
    MultiswitchCascadable,
    MultiswitchTerminal,
    MultiswitchRadial,
    Tap,
    Splitter,
    Amplifier,
    Attenuator,
    HeadendIfIf,
}

impl ComponentClass {
    pub fn is_multiswitch(self) -> bool {
        matches!(
            self,
            Self::MultiswitchCascadable | Self::MultiswitchTerminal | Self::MultiswitchRadial
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PortDirection {
    In,
    Out,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PortRole {
    Trunk,
    Subscriber,
    Terrestrial,
    SatInput,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PortSpec {
    pub id: String,
    pub direction: PortDirection,
    pub lines: BTreeSet<SignalLine>,
    pub role: PortRole,
}

/// Discrete gain trim. Positions are offsets in dB, strictly increasing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainRegulator {
    pub positions_db: Vec<f64>,
    pub current_index: usize,
    /// Lines whose regulated transfer paths this regulator shifts.
    pub lines: BTreeSet<SignalLine>,
}

impl GainRegulator {
    pub fn len(&self) -> usize {
        self.positions_db.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions_db.is_empty()
    }

    pub fn offset_db(&self, index: usize) -> Option<f64> {
        self.positions_db.get(index).copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainAnchor {
    pub freq_mhz: Frequency,
    pub gain_db: f64,
}

/// Piecewise-linear gain over frequency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GainCurve {
    pub anchors: Vec<GainAnchor>,
}

impl GainCurve {
    /// Constant gain across a band.
    pub fn flat(band: Band, gain_db: f64) -> Self {
        Self::sloped(band, gain_db, gain_db)
    }

    /// Linear slope from the lower to the upper band edge.
    pub fn sloped(band: Band, low_db: f64, high_db: f64) -> Self {
        let (lo, hi) = band.range_mhz();
        Self {
            anchors: vec![
                GainAnchor { freq_mhz: Frequency::mhz(lo).unwrap(), gain_db: low_db },
                GainAnchor { freq_mhz: Frequency::mhz(hi).unwrap(), gain_db: high_db },
            ],
        }
    }

    pub fn gain_at(&self, f: Frequency) -> f64 {
        let pts: Vec<(f64, f64)> = self.anchors.iter().map(|a| (a.freq_mhz.value(), a.gain_db)).collect();
        interpolate(&pts, f.value()).unwrap_or(0.0)
    }

    fn covers(&self, band: Band) -> bool {
        let (lo, hi) = band.range_mhz();
        match (self.anchors.first(), self.anchors.last()) {
            (Some(first), Some(last)) => first.freq_mhz.value() <= lo && last.freq_mhz.value() >= hi,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransferEntry {
    pub from: String,
    pub to: String,
    pub curves: BTreeMap<SignalLine, GainCurve>,
    pub noise_figure_db: f64,
    /// Active paths add amplifier noise to the C/N budget.
    pub active: bool,
    /// Regulated paths are shifted by the regulators covering their lines.
    pub regulated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentSpec {
    pub id: String,
    pub class: ComponentClass,
    pub ports: Vec<PortSpec>,
    pub transfers: Vec<TransferEntry>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub regulators: BTreeMap<String, GainRegulator>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_output_power_dbm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tap_isolation_db: Option<f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub metadata: BTreeMap<String, String>,
}

impl ComponentSpec {
    pub fn port(&self, id: &str) -> Option<&PortSpec> {
        self.ports.iter().find(|p| p.id == id)
    }

    /// The regulator acting on `line` for regulated paths, if any.
    pub fn regulator_for(&self, line: SignalLine) -> Option<(&str, &GainRegulator)> {
        self.regulators
            .iter()
            .find(|(_, r)| r.lines.contains(&line))
            .map(|(k, r)| (k.as_str(), r))
    }

    #[allow(clippy::neg_cmp_op_on_partial_ord)] // NaN must fail too
    pub fn validate(&self) -> Result<(), CatalogError> {
        let bad = |reason: String| CatalogError::InvalidComponent {
            component: self.id.clone(),
            reason,
        };
        let mut seen = BTreeSet::new();
        for p in &self.ports {
            if !seen.insert(p.id.as_str()) {
                return Err(bad(format!("duplicate port id '{}'", p.id)));
            }
        }
        for t in &self.transfers {
            let from = self.port(&t.from).ok_or_else(|| bad(format!("transfer from unknown port '{}'", t.from)))?;
            let to = self.port(&t.to).ok_or_else(|| bad(format!("transfer to unknown port '{}'", t.to)))?;
            if from.direction != PortDirection::In || to.direction != PortDirection::Out {
                return Err(bad(format!("transfer {} -> {} must go from an in-port to an out-port", t.from, t.to)));
            }
            if !(t.noise_figure_db >= 0.0 && t.noise_figure_db.is_finite()) {
                return Err(bad(format!("negative or non-finite noise figure on {} -> {}", t.from, t.to)));
            }
            for (line, curve) in &t.curves {
                if !from.lines.contains(line) || !to.lines.contains(line) {
                    return Err(bad(format!("{line} on {} -> {} not supported by both ports", t.from, t.to)));
                }
                if !curve.covers(line.band()) {
                    return Err(bad(format!("{line} curve on {} -> {} does not span its band", t.from, t.to)));
                }
                if curve.anchors.windows(2).any(|w| w[0].freq_mhz.value() >= w[1].freq_mhz.value()) {
                    return Err(bad(format!("{line} curve anchors on {} -> {} not increasing", t.from, t.to)));
                }
                if curve.anchors.iter().any(|a| !a.gain_db.is_finite()) {
                    return Err(bad(format!("non-finite gain on {} -> {}", t.from, t.to)));
                }
            }
        }
        let mut covered = BTreeSet::new();
        for (group, r) in &self.regulators {
            if r.is_empty() {
                return Err(bad(format!("regulator '{group}' has no positions")));
            }
            if r.current_index >= r.len() {
                return Err(bad(format!("regulator '{group}' current index {} out of range", r.current_index)));
            }
            if r.positions_db.windows(2).any(|w| !(w[0] < w[1])) || r.positions_db.iter().any(|p| !p.is_finite()) {
                return Err(bad(format!("regulator '{group}' positions not strictly increasing")));
            }
            for line in &r.lines {
                if !covered.insert(*line) {
                    return Err(bad(format!("line {line} controlled by more than one regulator")));
                }
            }
        }
        if let Some(iso) = self.tap_isolation_db {
            if !(iso >= 0.0 && iso.is_finite()) {
                return Err(bad("tap isolation must be >= 0".into()));
            }
        }

        let trunk = |dir| {
            self.ports
                .iter()
                .filter(|p| p.role == PortRole::Trunk && p.direction == dir)
                .collect::<Vec<_>>()
        };
        let (trunk_in, trunk_out) = (trunk(PortDirection::In), trunk(PortDirection::Out));
        match self.class {
            ComponentClass::MultiswitchTerminal if !trunk_out.is_empty() => {
                return Err(bad("terminal multiswitch cannot have trunk outputs".into()));
            }
            ComponentClass::MultiswitchCascadable => {
                if trunk_in.is_empty() || trunk_in.len() != trunk_out.len() {
                    return Err(bad("cascadable multiswitch needs matching trunk inputs and outputs".into()));
                }
                let lines = |ps: &[&PortSpec]| ps.iter().flat_map(|p| p.lines.iter().copied()).collect::<BTreeSet<_>>();
                if lines(&trunk_in) != lines(&trunk_out) {
                    return Err(bad("cascadable multiswitch trunk outputs must mirror its inputs".into()));
                }
            }
            ComponentClass::MultiswitchRadial => {
                let subs = self.ports.iter().filter(|p| p.role == PortRole::Subscriber).count();
                if subs > 16 {
                    return Err(bad(format!("radial multiswitch has {subs} subscriber ports, limit 16")));
                }
            }
            _ => {}
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CableAnchor {
    pub freq_mhz: Frequency,
    pub db_per_100m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CableSpec {
    pub id: String,
    pub anchors: Vec<CableAnchor>,
}

impl CableSpec {
    /// Coefficients `(a, b)` of `A(f) = a + b * sqrt(f)`, least squares through
    /// the anchors (exact for two anchors).
    pub fn model(&self) -> (f64, f64) {
        let n = self.anchors.len() as f64;
        let xs: Vec<f64> = self.anchors.iter().map(|a| a.freq_mhz.value().sqrt()).collect();
        let ys: Vec<f64> = self.anchors.iter().map(|a| a.db_per_100m).collect();
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        let b = sxy / sxx;
        (my - b * mx, b)
    }

    /// Attenuation in dB per 100 m at `f`.
    pub fn db_per_100m(&self, f: Frequency) -> f64 {
        let (a, b) = self.model();
        a + b * f.value().sqrt()
    }

    pub fn validate(&self) -> Result<(), CatalogError> {
        let bad = |reason: &str| CatalogError::InvalidCable {
            cable: self.id.clone(),
            reason: reason.to_string(),
        };
        if self.anchors.len() < 2 {
            return Err(bad("needs at least two anchors"));
        }
        if self.anchors.windows(2).any(|w| w[0].freq_mhz.value() >= w[1].freq_mhz.value()) {
            return Err(bad("anchor frequencies must be strictly increasing"));
        }
        if self.anchors.iter().any(|a| !a.db_per_100m.is_finite()) {
            return Err(bad("non-finite attenuation"));
        }
        let (a, b) = self.model();
        let (lowest, _) = Band::Terrestrial.range_mhz();
        if b < 0.0 {
            return Err(bad("attenuation must be non-decreasing in frequency"));
        }
        if a + b * lowest.sqrt() <= 0.0 {
            return Err(bad("attenuation must be strictly positive across the bands"));
        }
        Ok(())
    }
}

/// Cable gain (always <= 0) for a run of `length_m` metres at `f`.
pub fn cable_attenuation(cable: &CableSpec, f: Frequency, length_m: f64) -> Result<f64, CatalogError> {
    if f.band().is_none() {
        return Err(CatalogError::FrequencyOutOfRange(f.value()));
    }
    Ok(-(length_m / 100.0) * cable.db_per_100m(f))
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Catalog {
    pub components: BTreeMap<String, ComponentSpec>,
    pub cables: BTreeMap<String, CableSpec>,
}

impl Catalog {
    pub fn from_parts(components: Vec<ComponentSpec>, cables: Vec<CableSpec>) -> Result<Self, CatalogError> {
        let mut catalog = Catalog::default();
        for c in components {
            c.validate()?;
            let id = c.id.clone();
            if catalog.components.insert(id.clone(), c).is_some() {
                return Err(CatalogError::DuplicateId(id));
            }
        }
        for c in cables {
            c.validate()?;
            let id = c.id.clone();
            if catalog.cables.insert(id.clone(), c).is_some() {
                return Err(CatalogError::DuplicateId(id));
            }
        }
        Ok(catalog)
    }

    pub fn component(&self, id: &str) -> Result<&ComponentSpec, CatalogError> {
        self.components
            .get(id)
            .ok_or_else(|| CatalogError::UnknownComponent(id.to_string()))
    }

    pub fn cable(&self, id: &str) -> Result<&CableSpec, CatalogError> {
        self.cables.get(id).ok_or_else(|| CatalogError::UnknownCable(id.to_string()))
    }

    /// Adds or replaces entries, validating each.
    pub fn extend(&mut self, components: Vec<ComponentSpec>, cables: Vec<CableSpec>) -> Result<(), CatalogError> {
        for c in components {
            c.validate()?;
            self.components.insert(c.id.clone(), c);
        }
        for c in cables {
            c.validate()?;
            self.cables.insert(c.id.clone(), c);
        }
        Ok(())
    }
}

/// A component with a fixed regulator selection.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentInstance<'a> {
    pub spec: &'a ComponentSpec,
    pub regulator_indices: BTreeMap<String, usize>,
}

impl<'a> ComponentInstance<'a> {
    /// Offset applied to `line` on a transfer (zero on unregulated paths).
    pub fn offset_db(&self, transfer: &TransferEntry, line: SignalLine) -> f64 {
        if !transfer.regulated {
            return 0.0;
        }
        match self.spec.regulator_for(line) {
            Some((group, reg)) => reg.positions_db[self.regulator_indices[group]],
            None => 0.0,
        }
    }

    /// Effective gain from `from` to `to` for `line` at `f`, if that path exists.
    pub fn transfer_gain_db(&self, from: &str, to: &str, line: SignalLine, f: Frequency) -> Option<f64> {
        let t = self.spec.transfers.iter().find(|t| t.from == from && t.to == to)?;
        let curve = t.curves.get(&line)?;
        Some(curve.gain_at(f) + self.offset_db(t, line))
    }
}

/// Resolves `component_id` and applies `indices` on top of each regulator's
/// stored position.
pub fn instantiate<'a>(
    catalog: &'a Catalog,
    component_id: &str,
    indices: &BTreeMap<String, usize>,
) -> Result<ComponentInstance<'a>, CatalogError> {
    let spec = catalog.component(component_id)?;
    for group in indices.keys() {
        if !spec.regulators.contains_key(group) {
            return Err(CatalogError::UnknownRegulator {
                component: spec.id.clone(),
                group: group.clone(),
            });
        }
    }
    let mut regulator_indices = BTreeMap::new();
    for (group, reg) in &spec.regulators {
        let index = indices.get(group).copied().unwrap_or(reg.current_index);
        if index >= reg.len() {
            return Err(CatalogError::RegulatorIndexOutOfRange {
                component: spec.id.clone(),
                group: group.clone(),
                index,
                len: reg.len(),
            });
        }
        regulator_indices.insert(group.clone(), index);
    }
    Ok(ComponentInstance { spec, regulator_indices })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(mhz: f64) -> Frequency {
        Frequency::mhz(mhz).unwrap()
    }

    #[test]
    fn zero_length_cable_is_lossless() {
        let cat = builtin_catalog();
        for cable in cat.cables.values() {
            assert_eq!(cable_attenuation(cable, f(500.0), 0.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn cable_loss_is_linear_in_length() {
        let cat = builtin_catalog();
        let cable = cat.cable("trunk").unwrap();
        for mhz in [47.0, 470.0, 1200.0, 2150.0] {
            let one = cable_attenuation(cable, f(mhz), 37.5).unwrap();
            let two = cable_attenuation(cable, f(mhz), 75.0).unwrap();
            assert!((two - 2.0 * one).abs() < 1e-12);
        }
    }

    #[test]
    fn drop_cable_exact_at_anchor() {
        let cat = builtin_catalog();
        let loss = cable_attenuation(cat.cable("drop").unwrap(), f(800.0), 100.0).unwrap();
        assert!((loss + 17.0).abs() < 1e-12, "{loss}");
    }

    #[test]
    fn cable_rejects_gap_frequency() {
        let cat = builtin_catalog();
        assert_eq!(
            cable_attenuation(cat.cable("drop").unwrap(), f(900.0), 10.0),
            Err(CatalogError::FrequencyOutOfRange(900.0))
        );
    }

    #[test]
    fn least_squares_fit_through_three_anchors() {
        // points exactly on 1 + 0.5 sqrt(f)
        let cable = CableSpec {
            id: "x".into(),
            anchors: [100.0, 400.0, 1600.0]
                .iter()
                .map(|&m| CableAnchor { freq_mhz: f(m), db_per_100m: 1.0 + 0.5 * m.sqrt() })
                .collect(),
        };
        let (a, b) = cable.model();
        assert!((a - 1.0).abs() < 1e-12 && (b - 0.5).abs() < 1e-12);
        assert!(cable.validate().is_ok());
    }

    #[test]
    fn decreasing_cable_is_invalid() {
        let cable = CableSpec {
            id: "bad".into(),
            anchors: vec![
                CableAnchor { freq_mhz: f(100.0), db_per_100m: 10.0 },
                CableAnchor { freq_mhz: f(1000.0), db_per_100m: 5.0 },
            ],
        };
        assert!(matches!(cable.validate(), Err(CatalogError::InvalidCable { .. })));
    }

    #[test]
    fn sd5xx_tap_losses_within_4_to_15_db() {
        let cat = builtin_catalog();
        let taps: Vec<_> = cat
            .components
            .values()
            .filter(|c| c.class == ComponentClass::Tap && c.id.starts_with("SD5"))
            .collect();
        assert!(taps.len() >= 4);
        for tap in taps {
            let t = tap.transfers.iter().find(|t| t.to == "tap").unwrap();
            for (line, curve) in &t.curves {
                let (lo, hi) = line.band().range_mhz();
                for mhz in [lo, (lo + hi) / 2.0, hi] {
                    let loss = -curve.gain_at(f(mhz));
                    assert!((4.0..=15.0).contains(&loss), "{} {line} {loss}", tap.id);
                }
            }
        }
    }

    #[test]
    fn mv5xx_regulators() {
        let cat = builtin_catalog();
        let mv = cat.component("MV512").unwrap();
        for line in SignalLine::SAT {
            let (_, reg) = mv.regulator_for(line).unwrap();
            assert_eq!(reg.positions_db, vec![-12.0, -8.0, -4.0, 0.0]);
        }
        let (_, terr) = mv.regulator_for(SignalLine::Terr).unwrap();
        assert_eq!(terr.len(), 16);
    }

    #[test]
    fn mr512_has_sixteen_subscribers() {
        let cat = builtin_catalog();
        let mr = cat.component("MR512").unwrap();
        assert_eq!(mr.class, ComponentClass::MultiswitchRadial);
        assert_eq!(mr.ports.iter().filter(|p| p.role == PortRole::Subscriber).count(), 16);
        assert_eq!(mr.regulator_for(SignalLine::Terr).unwrap().1.len(), 16);
    }

    #[test]
    fn builtin_isolation_at_least_20_db() {
        for c in builtin_catalog().components.values() {
            if let Some(iso) = c.tap_isolation_db {
                assert!(iso >= 20.0, "{}", c.id);
            }
        }
    }

    #[test]
    fn regulator_shift_is_uniform_across_frequency() {
        let cat = builtin_catalog();
        let low = instantiate(&cat, "MV512", &BTreeMap::from([("sat_vl".to_string(), 0)])).unwrap();
        let high = instantiate(&cat, "MV512", &BTreeMap::from([("sat_vl".to_string(), 3)])).unwrap();
        for mhz in [950.0, 1234.5, 1800.0, 2150.0] {
            let d = high.transfer_gain_db("trunk_in", "sub1", SignalLine::Vl, f(mhz)).unwrap()
                - low.transfer_gain_db("trunk_in", "sub1", SignalLine::Vl, f(mhz)).unwrap();
            assert!((d - 12.0).abs() < 1e-12);
        }
        // other lines and the passive trunk path are untouched
        let a = high.transfer_gain_db("trunk_in", "sub1", SignalLine::Hh, f(1500.0));
        let b = low.transfer_gain_db("trunk_in", "sub1", SignalLine::Hh, f(1500.0));
        assert_eq!(a, b);
        let a = high.transfer_gain_db("trunk_in", "trunk_out", SignalLine::Vl, f(1500.0));
        let b = low.transfer_gain_db("trunk_in", "trunk_out", SignalLine::Vl, f(1500.0));
        assert_eq!(a, b);
    }

    #[test]
    fn instantiate_errors() {
        let cat = builtin_catalog();
        assert_eq!(
            instantiate(&cat, "XYZ", &BTreeMap::new()),
            Err(CatalogError::UnknownComponent("XYZ".into()))
        );
        let err = instantiate(&cat, "MR512", &BTreeMap::from([("terr".to_string(), 16)])).unwrap_err();
        assert!(matches!(err, CatalogError::RegulatorIndexOutOfRange { index: 16, len: 16, .. }));
        assert!(instantiate(&cat, "MR512", &BTreeMap::from([("terr".to_string(), 15)])).is_ok());
    }

    #[test]
    fn class_invariants_enforced() {
        let cat = builtin_catalog();
        let mut terminal = cat.component("MV512").unwrap().clone();
        terminal.class = ComponentClass::MultiswitchTerminal;
        assert!(terminal.validate().is_err());

        let mut cascadable = cat.component("MV512T").unwrap().clone();
        cascadable.class = ComponentClass::MultiswitchCascadable;
        assert!(cascadable.validate().is_err());
    }
}
