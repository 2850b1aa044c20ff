//! Level conversion, gridded level propagation and C/N accumulation.

mod formulas;
mod propagate;

use thiserror::Error;

use crate::catalog::CatalogError;
use crate::model::{Diagnostic, PortRef};
use crate::scenario::ScenarioError;
use crate::units::SignalLine;

pub use formulas::{
    cascade_cnr, combine_cnr, power_to_level, source_from_power, stage_cnr, DBM_TO_DBUV_75_OHM,
};
pub use propagate::{propagate, LineSummary, LineTrace, OutputSummary, SimulationResult, Simulator};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("network failed validation ({} diagnostics)", .0.len())]
    InvalidNetwork(Vec<Diagnostic>),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error("source '{node}' has no spectrum for {line}")]
    MissingSource { node: String, line: SignalLine },
    #[error("{line} arrives at {port} more than once")]
    AmbiguousArrival { port: PortRef, line: SignalLine },
    #[error("channel plan has no channels on {0}")]
    EmptyPlan(SignalLine),
}
