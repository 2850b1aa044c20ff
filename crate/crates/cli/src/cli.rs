//! Command-line front end. [`run`] takes explicit writers so tests can drive
//! it without spawning a process.

use std::ffi::OsString;
use std::io::Write;
use std::net::{IpAddr, Ipv4Addr, SocketAddr};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand};
use smatv_core::compliance::evaluate;
use smatv_core::netio::{
    build_case_study, export_optimize, export_report, export_sweep, parse_network, parse_scenario,
    serialize_catalog, serialize_network, NetioError, ParsedNetwork, ReportFormat,
};
use smatv_core::optimize::{optimize_gains, sweep_input_level};
use smatv_core::{builtin_catalog, Scenario, SignalLine, Simulator};

pub const EXIT_CLEAN: i32 = 0;
pub const EXIT_VIOLATIONS: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "smatv", version, about = "Plan and check SMATV distribution networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a network and check every outlet against the design limits.
    Simulate {
        network: PathBuf,
        /// Scenario file applied on top of the one embedded in the network.
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "table")]
        format: ReportFormat,
    },
    /// Count compliant outlets over a range of source levels for one line.
    Sweep {
        network: PathBuf,
        #[arg(long)]
        line: SignalLine,
        /// `start:stop:step` in dBuV, or a single level.
        #[arg(long, default_value = "50:90:10", value_parser = parse_levels)]
        levels: Levels,
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "table")]
        format: ReportFormat,
    },
    /// Search regulator positions for the most compliant outlets.
    Optimize {
        network: PathBuf,
        #[arg(long, default_value_t = 2000, value_parser = clap::value_parser!(u64).range(1..))]
        budget: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the network with the best scenario embedded to this file.
        #[arg(long)]
        apply: Option<PathBuf>,
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "table")]
        format: ReportFormat,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long, env = "SMATV_PORT", default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value_t = IpAddr::V4(Ipv4Addr::LOCALHOST))]
        bind: IpAddr,
        /// Directory holding `network.json`; edits are saved back to it.
        #[arg(long)]
        network_dir: Option<PathBuf>,
        /// Static assets served at `/`.
        #[arg(long)]
        static_dir: Option<PathBuf>,
    },
    /// Write the bundled five-floor case study.
    CaseStudy {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the built-in component catalog.
    Catalog {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Parse and validate a network file without simulating it.
    Validate { network: PathBuf },
}

/// Source levels for a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct Levels(pub Vec<f64>);

/// Parses `start:stop:step` (inclusive) or a single number.
pub fn parse_levels(s: &str) -> Result<Levels, String> {
    let num = |t: &str| t.trim().parse::<f64>().map_err(|_| format!("'{t}' is not a number"));
    let parts: Vec<&str> = s.split(':').collect();
    let (start, stop, step) = match parts.as_slice() {
        [one] => return Ok(Levels(vec![num(one)?])),
        [a, b, c] => (num(a)?, num(b)?, num(c)?),
        _ => return Err(format!("'{s}' is neither a level nor start:stop:step")),
    };
    if !(start.is_finite() && stop.is_finite() && step.is_finite()) {
        return Err("range bounds must be finite".into());
    }
    if step <= 0.0 {
        return Err("step must be positive".into());
    }
    if stop < start {
        return Err("stop is below start".into());
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
    if n > 10_000 {
        return Err(format!("range has {n} levels; at most 10000 are allowed"));
    }
    Ok(Levels((0..n).map(|i| start + step * i as f64).collect()))
}

fn read(path: &Path) -> anyhow::Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn load_network(path: &Path) -> anyhow::Result<ParsedNetwork> {
    parse_network(&read(path)?).with_context(|| format!("{} is not a usable network", path.display()))
}

/// Embedded scenario, overridden key by key by `--scenario` if given.
fn effective_scenario(parsed: &ParsedNetwork, file: Option<&Path>) -> anyhow::Result<Scenario> {
    let base = parsed.scenario_or_default();
    match file {
        Some(p) => {
            let extra = parse_scenario(&read(p)?, &parsed.network).with_context(|| format!("in {}", p.display()))?;
            Ok(base.merged(&extra))
        }
        None => Ok(base),
    }
}

fn emit(text: &str, out: Option<&Path>, stdout: &mut dyn Write) -> anyhow::Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
        None => stdout.write_all(text.as_bytes()).context("cannot write to stdout"),
    }
}

fn warn(parsed: &ParsedNetwork, stderr: &mut dyn Write) {
    for d in &parsed.warnings {
        let _ = writeln!(stderr, "{d}");
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_CLEAN };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { stderr.write_all(text.as_bytes()) } else { stdout.write_all(text.as_bytes()) };
            return code;
        }
    };
    match execute(cli.command, stdout, stderr) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e:#}");
            if let Some(n) = e.downcast_ref::<NetioError>() {
                for d in n.diagnostics() {
                    let _ = writeln!(stderr, "  {d}");
                }
            }
            EXIT_ERROR
        }
    }
}

fn execute(cmd: Command, stdout: &mut dyn Write, stderr: &mut dyn Write) -> anyhow::Result<i32> {
    match cmd {
        Command::Simulate { network, scenario, out, format } => {
            let parsed = load_network(&network)?;
            warn(&parsed, stderr);
            let sc = effective_scenario(&parsed, scenario.as_deref())?;
            let result = Simulator::new(&parsed.network)?.run(&sc)?;
            let report = evaluate(&parsed.network, &result);
            emit(&export_report(&report, format), out.as_deref(), stdout)?;
            Ok(if report.is_clean() { EXIT_CLEAN } else { EXIT_VIOLATIONS })
        }
        Command::Sweep { network, line, levels, scenario, out, format } => {
            let parsed = load_network(&network)?;
            warn(&parsed, stderr);
            let sc = effective_scenario(&parsed, scenario.as_deref())?;
            let sweep = sweep_input_level(&parsed.network, &sc, line, &levels.0)?;
            emit(&export_sweep(&sweep, format), out.as_deref(), stdout)?;
            Ok(EXIT_CLEAN)
        }
        Command::Optimize { network, budget, seed, apply, scenario, out, format } => {
            let parsed = load_network(&network)?;
            warn(&parsed, stderr);
            let sc = effective_scenario(&parsed, scenario.as_deref())?;
            let budget = usize::try_from(budget).map_err(|_| anyhow!("budget too large"))?;
            let result = optimize_gains(&parsed.network, &sc, budget, seed)?;
            if let Some(path) = apply {
                let text = serialize_network(&parsed.network, Some(&result.scenario));
                std::fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))?;
            }
            emit(&export_optimize(&result, format), out.as_deref(), stdout)?;
            Ok(EXIT_CLEAN)
        }
        Command::Serve { port, bind, network_dir, static_dir } => {
            let state = crate::service::AppState::load(network_dir)?;
            let app = crate::service::router(state, static_dir.as_deref());
            let addr = SocketAddr::new(bind, port);
            let rt = tokio::runtime::Runtime::new().context("cannot start the async runtime")?;
            rt.block_on(async {
                let listener =
                    tokio::net::TcpListener::bind(addr).await.with_context(|| format!("cannot listen on {addr}"))?;
                let _ = writeln!(stderr, "listening on http://{}", listener.local_addr()?);
                axum::serve(listener, app).await.context("server stopped")
            })?;
            Ok(EXIT_CLEAN)
        }
        Command::CaseStudy { out } => {
            let (net, sc) = build_case_study();
            emit(&serialize_network(&net, Some(&sc)), out.as_deref(), stdout)?;
            Ok(EXIT_CLEAN)
        }
        Command::Catalog { out } => {
            emit(&serialize_catalog(&builtin_catalog()), out.as_deref(), stdout)?;
            Ok(EXIT_CLEAN)
        }
        Command::Validate { network } => {
            let parsed = load_network(&network)?;
            warn(&parsed, stderr);
            if parsed.scenario.is_none() {
                let _ = writeln!(stdout, "ok (no embedded scenario)");
            } else {
                let _ = writeln!(stdout, "ok");
            }
            Ok(EXIT_CLEAN)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges_are_inclusive() {
        assert_eq!(parse_levels("50:90:10").unwrap().0, vec![50.0, 60.0, 70.0, 80.0, 90.0]);
        assert_eq!(parse_levels("80").unwrap().0, vec![80.0]);
        assert_eq!(parse_levels("70:71:0.5").unwrap().0, vec![70.0, 70.5, 71.0]);
        assert_eq!(parse_levels("0:1:0.1").unwrap().0.len(), 11);
    }

    #[test]
    fn bad_ranges_are_refused() {
        for bad in ["50:90:0", "50:90:-1", "90:50:10", "a:b:c", "1:2", "", "1:inf:1"] {
            assert!(parse_levels(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
