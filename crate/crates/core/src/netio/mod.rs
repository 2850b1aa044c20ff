//! Network, catalog, scenario and report files, plus the bundled case study.

mod case_study;
mod document;
mod report;

use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

use crate::model::Diagnostic;

pub use case_study::{
    build_case_study, multiswitch_id, sat_output_id, source_id, tv_output_id, APARTMENTS_PER_FLOOR, FLOORS,
    SAT_PORTS_PER_APARTMENT,
};
pub use document::{parse_catalog, parse_network, parse_scenario, serialize_catalog, serialize_network, ParsedNetwork};
pub use report::{export_optimize, export_report, export_sweep, parse_report, ReportDocument, ReportFormat};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NetioError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("schema error: {0}")]
    Schema(String),
    #[error("network failed validation ({} diagnostics)", .0.len())]
    Validation(Vec<Diagnostic>),
}

impl NetioError {
    pub fn diagnostics(&self) -> &[Diagnostic] {
        match self {
            NetioError::Validation(d) => d,
            _ => &[],
        }
    }
}

fn from_json<T: DeserializeOwned>(text: &str) -> Result<T, NetioError> {
    serde_json::from_str(text).map_err(|e| {
        use serde_json::error::Category;
        match e.classify() {
            Category::Syntax | Category::Eof | Category::Io => NetioError::Syntax {
                line: e.line(),
                column: e.column(),
                message: e.to_string(),
            },
            Category::Data => NetioError::Schema(e.to_string()),
        }
    })
}

/// Pretty JSON with object keys sorted and a trailing newline.
pub(crate) fn canonical_json<T: Serialize>(value: &T) -> String {
    let v = serde_json::to_value(value).expect("document serializes");
    let mut s = serde_json::to_string_pretty(&v).expect("value serializes");
    s.push('\n');
    s
}
