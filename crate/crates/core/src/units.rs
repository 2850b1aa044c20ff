//! Frequency, band, signal-line and decibel quantities shared by every module.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum UnitError {
    #[error("frequency {0} MHz outside (0, 3000]")]
    FrequencyOutOfRange(f64),
    #[error("unknown signal line '{0}'")]
    UnknownLine(String),
}

/// A frequency in MHz, `0 < f <= 3000`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Frequency(f64);

impl Frequency {
    pub const MAX_MHZ: f64 = 3000.0;

    pub fn mhz(value: f64) -> Result<Self, UnitError> {
        if value.is_finite() && value > 0.0 && value <= Self::MAX_MHZ {
            Ok(Self(value))
        } else {
            Err(UnitError::FrequencyOutOfRange(value))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn band(self) -> Option<Band> {
        Band::ALL.into_iter().find(|b| b.contains(self))
    }
}

impl TryFrom<f64> for Frequency {
    type Error = UnitError;

    fn try_from(value: f64) -> Result<Self, Self::Error> {
        Self::mhz(value)
    }
}

impl From<Frequency> for f64 {
    fn from(f: Frequency) -> f64 {
        f.0
    }
}

impl fmt::Display for Frequency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} MHz", self.0)
    }
}

/// The two distribution bands carried on the same coax plant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Band {
    Terrestrial,
    SatIf,
}

impl Band {
    pub const ALL: [Band; 2] = [Band::Terrestrial, Band::SatIf];

    /// Inclusive band edges in MHz.
    pub fn range_mhz(self) -> (f64, f64) {
        match self {
            Band::Terrestrial => (47.0, 862.0),
            Band::SatIf => (950.0, 2150.0),
        }
    }

    pub fn contains(self, f: Frequency) -> bool {
        let (lo, hi) = self.range_mhz();
        (lo..=hi).contains(&f.value())
    }

    /// Nominal channel bandwidth; SAT IF transponders are 27 or 36 MHz.
    pub fn default_channel_bandwidth_mhz(self) -> f64 {
        match self {
            Band::Terrestrial => 8.0,
            Band::SatIf => 36.0,
        }
    }

    pub fn allowed_channel_bandwidths_mhz(self) -> &'static [f64] {
        match self {
            Band::Terrestrial => &[8.0],
            Band::SatIf => &[27.0, 36.0],
        }
    }
}

impl fmt::Display for Band {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Band::Terrestrial => f.write_str("terrestrial"),
            Band::SatIf => f.write_str("SAT IF"),
        }
    }
}

/// One trunk signal: the four SAT IF polarity/sub-band lines plus terrestrial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SignalLine {
    #[serde(rename = "VL")]
    Vl,
    #[serde(rename = "VH")]
    Vh,
    #[serde(rename = "HL")]
    Hl,
    #[serde(rename = "HH")]
    Hh,
    #[serde(rename = "TERR")]
    Terr,
}

impl SignalLine {
    pub const ALL: [SignalLine; 5] = [
        SignalLine::Vl,
        SignalLine::Vh,
        SignalLine::Hl,
        SignalLine::Hh,
        SignalLine::Terr,
    ];
    pub const SAT: [SignalLine; 4] = [SignalLine::Vl, SignalLine::Vh, SignalLine::Hl, SignalLine::Hh];

    pub fn band(self) -> Band {
        match self {
            SignalLine::Terr => Band::Terrestrial,
            _ => Band::SatIf,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SignalLine::Vl => "VL",
            SignalLine::Vh => "VH",
            SignalLine::Hl => "HL",
            SignalLine::Hh => "HH",
            SignalLine::Terr => "TERR",
        }
    }
}

impl fmt::Display for SignalLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SignalLine {
    type Err = UnitError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SignalLine::ALL
            .into_iter()
            .find(|l| l.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| UnitError::UnknownLine(s.to_string()))
    }
}

/// Power in dBm.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PowerDbm(pub f64);

/// Carrier-to-noise ratio in dB. An ideal source carries no noise at all.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "Option<f64>", into = "Option<f64>")]
pub enum Cnr {
    Db(f64),
    Unconstrained,
}

impl Cnr {
    /// Linear noise-to-carrier ratio; zero for an ideal signal.
    pub fn noise_ratio(self) -> f64 {
        match self {
            Cnr::Db(db) => 10f64.powf(-db / 10.0),
            Cnr::Unconstrained => 0.0,
        }
    }

    pub fn from_noise_ratio(ratio: f64) -> Self {
        if ratio > 0.0 {
            Cnr::Db(-10.0 * ratio.log10())
        } else {
            Cnr::Unconstrained
        }
    }

    pub fn db(self) -> Option<f64> {
        match self {
            Cnr::Db(db) => Some(db),
            Cnr::Unconstrained => None,
        }
    }

    /// Unconstrained compares above every finite value.
    pub fn is_below(self, floor_db: f64) -> bool {
        matches!(self, Cnr::Db(db) if db < floor_db)
    }

    pub fn min(self, other: Cnr) -> Cnr {
        match (self, other) {
            (Cnr::Db(a), Cnr::Db(b)) => Cnr::Db(a.min(b)),
            (Cnr::Unconstrained, x) | (x, Cnr::Unconstrained) => x,
        }
    }
}

impl From<Option<f64>> for Cnr {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cnr::Unconstrained, Cnr::Db)
    }
}

impl From<Cnr> for Option<f64> {
    fn from(c: Cnr) -> Self {
        c.db()
    }
}

impl fmt::Display for Cnr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cnr::Db(db) => write!(f, "{db:.2} dB"),
            Cnr::Unconstrained => f.write_str("ideal"),
        }
    }
}

/// Linear interpolation over `(x, y)` anchors sorted by `x`, held constant
/// beyond the first and last anchor.
pub(crate) fn interpolate(anchors: &[(f64, f64)], x: f64) -> Option<f64> {
    let (first, last) = (anchors.first()?, anchors.last()?);
    if x <= first.0 {
        return Some(first.1);
    }
    if x >= last.0 {
        return Some(last.1);
    }
    let i = anchors.partition_point(|a| a.0 <= x);
    let (x0, y0) = anchors[i - 1];
    let (x1, y1) = anchors[i];
    Some(y0 + (y1 - y0) * (x - x0) / (x1 - x0))
}
