//! Input-level sweeps, regulator search and per-output knob sensitivity.

mod search;
mod sensitivity;
mod sweep;

use thiserror::Error;

use crate::engine::EngineError;
use crate::units::SignalLine;

pub use search::{optimize_gains, OptimizeResult, SearchMethod, TraceEntry, EXHAUSTIVE_LIMIT};
pub use sensitivity::{sensitivity, Knob, KnobEffect};
pub use sweep::{single_source, sweep_input_level, SweepResult, SweepRow};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OptimizeError {
    #[error("{line} is fed by several sources: {}", sources.join(", "))]
    AmbiguousSource { line: SignalLine, sources: Vec<String> },
    #[error("no source emits {0}")]
    NoSource(SignalLine),
    #[error("no levels to sweep")]
    EmptyLevels,
    #[error("sweep level {0} is not finite")]
    InvalidLevel(f64),
    #[error("network has no gain regulators")]
    NoRegulators,
    #[error("evaluation budget must be at least 1")]
    ZeroBudget,
    #[error(transparent)]
    Engine(#[from] EngineError),
}
