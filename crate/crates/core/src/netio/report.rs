use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::{canonical_json, from_json, NetioError, FORMAT_VERSION};
use crate::compliance::{ComplianceReport, Violation};
use crate::model::OutputKind;
use crate::optimize::{OptimizeResult, SearchMethod, SweepResult, SweepRow};
use crate::units::Cnr;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Table,
    Machine,
}

impl std::str::FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "table" => Ok(ReportFormat::Table),
            "machine" | "json" => Ok(ReportFormat::Machine),
            other => Err(format!("unknown format '{other}' (expected table or machine)")),
        }
    }
}

/// Machine-readable report file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ReportDocument {
    Compliance { format_version: u32, report: ComplianceReport },
    Sweep { format_version: u32, sweep: SweepResult },
    Optimize { format_version: u32, result: OptimizeResult },
}

impl ReportDocument {
    fn format_version(&self) -> u32 {
        match self {
            ReportDocument::Compliance { format_version, .. }
            | ReportDocument::Sweep { format_version, .. }
            | ReportDocument::Optimize { format_version, .. } => *format_version,
        }
    }
}

pub fn export_report(report: &ComplianceReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Machine => canonical_json(&ReportDocument::Compliance {
            format_version: FORMAT_VERSION,
            report: report.clone(),
        }),
        ReportFormat::Table => report_table(report),
    }
}

pub fn export_sweep(sweep: &SweepResult, format: ReportFormat) -> String {
    match format {
        ReportFormat::Machine => canonical_json(&ReportDocument::Sweep {
            format_version: FORMAT_VERSION,
            sweep: sweep.clone(),
        }),
        ReportFormat::Table => sweep_table(sweep),
    }
}

pub fn export_optimize(result: &OptimizeResult, format: ReportFormat) -> String {
    match format {
        ReportFormat::Machine => canonical_json(&ReportDocument::Optimize {
            format_version: FORMAT_VERSION,
            result: result.clone(),
        }),
        ReportFormat::Table => optimize_table(result),
    }
}

pub fn parse_report(text: &str) -> Result<ReportDocument, NetioError> {
    let doc: ReportDocument = from_json(text)?;
    if doc.format_version() != FORMAT_VERSION {
        return Err(NetioError::Schema(format!("unsupported format_version {}", doc.format_version())));
    }
    Ok(doc)
}

fn cnr_text(c: Cnr) -> String {
    match c {
        Cnr::Db(db) => format!("{db:.2}"),
        Cnr::Unconstrained => "ideal".to_string(),
    }
}

fn opt_u32(v: Option<u32>) -> String {
    v.map_or_else(|| "-".to_string(), |v| v.to_string())
}

fn violation_text(v: &Violation) -> String {
    let mut s = format!("{:?}", v.kind);
    s.push_str(&format!(" {}", v.node));
    if let Some(p) = &v.port {
        s.push_str(&format!(":{p}"));
    }
    if let Some(l) = v.line {
        s.push_str(&format!(" {l}"));
    }
    if let Some(f) = v.freq_mhz {
        s.push_str(&format!(" @ {f} MHz"));
    }
    let unit = v.unit.as_str();
    match v.measured {
        Some(m) => s.push_str(&format!(": {m:.2} {unit} (limit {:.2} {unit})", v.limit)),
        None => s.push_str(&format!(": not delivered (limit {:.2} {unit})", v.limit)),
    }
    s
}

fn report_table(r: &ComplianceReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "Number of outputs within limits:  {}", r.outputs_within);
    let _ = writeln!(out, "Number of outputs outside limits: {}", r.outputs_outside);
    let _ = writeln!(out, "Total outputs:                    {}", r.total_outputs());
    let _ = writeln!(out);
    let _ = writeln!(
        out,
        "{:<24} {:<4} {:>5} {:>4} {:<7} {:<5} {:>9} {:>9} {:>10}",
        "OUTPUT", "KIND", "FLOOR", "APT", "VERDICT", "LINE", "MIN dBuV", "MAX dBuV", "C/N dB"
    );
    for o in &r.outputs {
        let kind = match o.kind {
            OutputKind::SatReceiver => "sat",
            OutputKind::Tv => "tv",
        };
        let verdict = if o.pass { "pass" } else { "FAIL" };
        let mut first = true;
        for (line, s) in &o.lines {
            let head = if first {
                format!("{:<24} {:<4} {:>5} {:>4} {:<7}", o.output, kind, opt_u32(o.floor), opt_u32(o.apartment), verdict)
            } else {
                format!("{:<24} {:<4} {:>5} {:>4} {:<7}", "", "", "", "", "")
            };
            first = false;
            let _ = writeln!(
                out,
                "{head} {:<5} {:>9.2} {:>9.2} {:>10}",
                line.as_str(),
                s.min_level_dbuv,
                s.max_level_dbuv,
                cnr_text(s.worst_cnr_db)
            );
        }
        if first {
            let _ = writeln!(
                out,
                "{:<24} {:<4} {:>5} {:>4} {:<7} (no signal)",
                o.output,
                kind,
                opt_u32(o.floor),
                opt_u32(o.apartment),
                verdict
            );
        }
    }
    let _ = writeln!(out);
    if r.is_clean() {
        let _ = writeln!(out, "all outputs within limits");
    } else {
        let _ = writeln!(out, "Violations:");
        for o in &r.outputs {
            for v in &o.violations {
                let _ = writeln!(out, "  {}", violation_text(v));
            }
        }
        for v in &r.component_violations {
            let _ = writeln!(out, "  {}", violation_text(v));
        }
    }
    out
}

fn sweep_rows(out: &mut String, label: &str, rows: &[SweepRow]) {
    let _ = writeln!(
        out,
        "{:>26}  {:>30}  {:>31}",
        label, "Number of outputs within limits", "Number of outputs outside limits"
    );
    for row in rows {
        let _ = writeln!(out, "{:>26.1}  {:>30}  {:>31}", row.level_dbuv, row.outputs_within, row.outputs_outside);
    }
}

fn sweep_table(s: &SweepResult) -> String {
    let mut out = String::new();
    let label = format!("Input level {} [dBuV]", s.line);
    sweep_rows(&mut out, &label, &s.rows);
    let _ = writeln!(out);
    let _ = writeln!(out, "source: {}", s.source);
    let _ = writeln!(out, "best requested level: {:.1} dBuV", s.argmax_level_dbuv);
    let _ = writeln!(
        out,
        "optimum interval (1 dB steps): {:.1} .. {:.1} dBuV",
        s.optimum_interval_dbuv[0], s.optimum_interval_dbuv[1]
    );
    out
}

fn optimize_table(r: &OptimizeResult) -> String {
    let mut out = String::new();
    let method = match r.method {
        SearchMethod::Exhaustive => "exhaustive",
        SearchMethod::CoordinateDescent => "coordinate descent",
    };
    let _ = writeln!(out, "method:                  {method}");
    let _ = writeln!(out, "evaluations:             {}", r.evaluations);
    let _ = writeln!(out, "outputs within (start):  {}", r.start_outputs_within);
    let _ = writeln!(out, "outputs within (best):   {}", r.outputs_within);
    let _ = writeln!(out, "outputs outside (best):  {}", r.outputs_outside);
    let _ = writeln!(out, "total margin dB (best):  {:.2}", r.total_margin_db);
    let _ = writeln!(out);
    let _ = writeln!(out, "{:<24} {:<10} {:>5}", "NODE", "REGULATOR", "INDEX");
    for (reg, index) in r.regulators.iter().zip(&r.indices) {
        let _ = writeln!(out, "{:<24} {:<10} {:>5}", reg.node, reg.group, index);
    }
    out
}
