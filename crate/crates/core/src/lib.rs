//! Level, C/N and compliance modelling for SMATV distribution networks.
//!
//! A [`model::Network`] is a graph of sources, catalog components and outlets
//! joined by cable runs. [`engine`] propagates per-line level and C/N traces
//! across a frequency grid, [`compliance`] checks them against design windows,
//! and [`optimize`] sweeps source levels and searches regulator settings.

pub mod catalog;
pub mod compliance;
pub mod engine;
pub mod model;
pub mod netio;
pub mod optimize;
pub mod scenario;
pub mod units;

pub use catalog::{builtin_catalog, Catalog, CatalogError};
pub use engine::{propagate, EngineError, SimulationResult, Simulator};
pub use model::Network;
pub use scenario::{RegulatorRef, Scenario};
pub use units::{Band, Cnr, Frequency, PowerDbm, SignalLine};
