//! HTTP service over a single network document.
//!
//! Readers clone an `Arc` of the current snapshot and never hold the lock
//! while simulating. `PUT /api/network` swaps the snapshot when the caller's
//! revision matches. Optimizations run as background jobs.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};

use anyhow::Context;
use axum::body::Bytes;
use axum::extract::{Path as UrlPath, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use smatv_core::compliance::{evaluate, ComplianceReport, Violation};
use smatv_core::model::{BandLimits, Diagnostic, FrequencyGrid, NodeKind, OutputKind};
use smatv_core::netio::{build_case_study, parse_network, serialize_catalog, serialize_network, NetioError};
use smatv_core::optimize::{optimize_gains, sweep_input_level, OptimizeResult};
use smatv_core::{Cnr, EngineError, Scenario, SignalLine, Simulator};
use tower_http::services::ServeDir;

use crate::cli::parse_levels;

/// File name of the persisted document inside `--network-dir`.
pub const NETWORK_FILE: &str = "network.json";

pub struct Snapshot {
    pub revision: u64,
    pub network: smatv_core::Network,
    pub scenario: Scenario,
    pub document: Value,
    pub warnings: Vec<Diagnostic>,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum JobState {
    Running,
    Done { result: OptimizeResult },
    Failed { error: String },
}

pub struct AppState {
    current: RwLock<Arc<Snapshot>>,
    network_dir: Option<PathBuf>,
    jobs: Mutex<BTreeMap<u64, (u64, JobState)>>,
    next_job: AtomicU64,
}

impl AppState {
    /// Loads `network.json` from `network_dir` if present, else the bundled case study.
    pub fn load(network_dir: Option<PathBuf>) -> anyhow::Result<Arc<Self>> {
        let file = network_dir.as_ref().map(|d| d.join(NETWORK_FILE)).filter(|f| f.exists());
        let text = match &file {
            Some(f) => std::fs::read_to_string(f).with_context(|| format!("cannot read {}", f.display()))?,
            None => {
                let (net, sc) = build_case_study();
                serialize_network(&net, Some(&sc))
            }
        };
        let snapshot = snapshot_from(&text, 1).map_err(|e| anyhow::anyhow!("{}", e.message))?;
        Ok(Self::with_snapshot(snapshot, network_dir))
    }

    pub fn from_text(text: &str, network_dir: Option<PathBuf>) -> Result<Arc<Self>, ApiError> {
        Ok(Self::with_snapshot(snapshot_from(text, 1)?, network_dir))
    }

    fn with_snapshot(snapshot: Snapshot, network_dir: Option<PathBuf>) -> Arc<Self> {
        Arc::new(Self {
            current: RwLock::new(Arc::new(snapshot)),
            network_dir,
            jobs: Mutex::new(BTreeMap::new()),
            next_job: AtomicU64::new(1),
        })
    }

    pub fn snapshot(&self) -> Arc<Snapshot> {
        self.current.read().expect("snapshot lock").clone()
    }
}

fn snapshot_from(text: &str, revision: u64) -> Result<Snapshot, ApiError> {
    let parsed = parse_network(text).map_err(ApiError::from)?;
    let canonical = serialize_network(&parsed.network, parsed.scenario.as_ref());
    Ok(Snapshot {
        revision,
        scenario: parsed.scenario_or_default(),
        document: serde_json::from_str(&canonical).expect("canonical text is JSON"),
        network: parsed.network,
        warnings: parsed.warnings,
    })
}

/// JSON error body: `{"error": ..., "diagnostics": [...]}`.
#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub message: String,
    pub diagnostics: Vec<Diagnostic>,
    pub extra: Option<Value>,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self { status, message: message.into(), diagnostics: Vec::new(), extra: None }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, message)
    }

    fn not_found(message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, message)
    }
}

impl From<NetioError> for ApiError {
    fn from(e: NetioError) -> Self {
        Self { diagnostics: e.diagnostics().to_vec(), ..Self::bad_request(e.to_string()) }
    }
}

impl From<EngineError> for ApiError {
    fn from(e: EngineError) -> Self {
        let diagnostics = match &e {
            EngineError::InvalidNetwork(d) => d.clone(),
            _ => Vec::new(),
        };
        Self { diagnostics, ..Self::bad_request(e.to_string()) }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut body = json!({ "error": self.message, "diagnostics": self.diagnostics });
        if let (Some(Value::Object(extra)), Value::Object(map)) = (self.extra, &mut body) {
            map.extend(extra);
        }
        (self.status, Json(body)).into_response()
    }
}

/// Parses a JSON body; an empty body means `T::default()`.
fn body<T: DeserializeOwned + Default>(bytes: &Bytes) -> Result<T, ApiError> {
    if bytes.iter().all(u8::is_ascii_whitespace) {
        return Ok(T::default());
    }
    serde_json::from_slice(bytes).map_err(|e| ApiError::bad_request(format!("invalid request body: {e}")))
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, ApiError> + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, format!("worker failed: {e}")))?
}

fn scenario_with(snap: &Snapshot, overrides: &Scenario) -> Result<Scenario, ApiError> {
    let sc = snap.scenario.merged(overrides);
    sc.validate(&snap.network).map_err(|e| ApiError::bad_request(format!("scenario: {e}")))?;
    Ok(sc)
}

pub fn router(state: Arc<AppState>, static_dir: Option<&Path>) -> Router {
    let api = Router::new()
        .route("/api/network", get(get_network).put(put_network))
        .route("/api/catalog", get(get_catalog))
        .route("/api/simulate", post(simulate))
        .route("/api/sweep", post(sweep))
        .route("/api/optimize", post(optimize))
        .route("/api/jobs/{id}", get(job))
        .route("/api/outputs/{id}/trace", get(trace).post(trace))
        .with_state(state);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

async fn get_network(State(state): State<Arc<AppState>>) -> Json<Value> {
    let snap = state.snapshot();
    Json(json!({ "revision": snap.revision, "document": snap.document, "warnings": snap.warnings }))
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct PutNetwork {
    revision: u64,
    document: Value,
}

async fn put_network(State(state): State<Arc<AppState>>, bytes: Bytes) -> Result<Json<Value>, ApiError> {
    let req: PutNetwork = body(&bytes)?;
    let text = req.document.to_string();
    let state2 = state.clone();
    blocking(move || {
        let mut next = snapshot_from(&text, 0)?;
        let mut current = state2.current.write().expect("snapshot lock");
        if current.revision != req.revision {
            let mut err = ApiError::new(StatusCode::CONFLICT, "the document changed since it was read");
            err.extra = Some(json!({ "current_revision": current.revision }));
            return Err(err);
        }
        next.revision = current.revision + 1;
        if let Some(dir) = &state2.network_dir {
            persist(dir, &next).map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, format!("{e:#}")))?;
        }
        let reply = json!({ "revision": next.revision, "warnings": next.warnings });
        *current = Arc::new(next);
        Ok(Json(reply))
    })
    .await
}

/// Writes through a temporary file so a crash never leaves half a document.
fn persist(dir: &Path, snap: &Snapshot) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let tmp = dir.join(format!("{NETWORK_FILE}.tmp"));
    let mut text = serde_json::to_string_pretty(&snap.document)?;
    text.push('\n');
    std::fs::write(&tmp, text).with_context(|| format!("cannot write {}", tmp.display()))?;
    std::fs::rename(&tmp, dir.join(NETWORK_FILE)).context("cannot replace network.json")?;
    Ok(())
}

async fn get_catalog(State(state): State<Arc<AppState>>) -> Response {
    let snap = state.snapshot();
    let text = serialize_catalog(&snap.network.catalog);
    ([(axum::http::header::CONTENT_TYPE, "application/json")], text).into_response()
}

#[derive(Debug, Serialize)]
pub struct SimulateResponse {
    pub revision: u64,
    pub scenario: Scenario,
    pub grid: FrequencyGrid,
    pub outputs: BTreeMap<String, smatv_core::engine::OutputSummary>,
    pub report: ComplianceReport,
}

async fn simulate(State(state): State<Arc<AppState>>, bytes: Bytes) -> Result<Json<SimulateResponse>, ApiError> {
    let overrides: Scenario = body(&bytes)?;
    let snap = state.snapshot();
    blocking(move || {
        let sc = scenario_with(&snap, &overrides)?;
        let result = Simulator::new(&snap.network)?.run(&sc)?;
        let report = evaluate(&snap.network, &result);
        Ok(Json(SimulateResponse {
            revision: snap.revision,
            scenario: sc,
            grid: result.grid,
            outputs: result.outputs,
            report,
        }))
    })
    .await
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum LevelsSpec {
    List(Vec<f64>),
    Range(String),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepRequest {
    line: Option<SignalLine>,
    levels: Option<LevelsSpec>,
    #[serde(default)]
    scenario: Scenario,
}

async fn sweep(State(state): State<Arc<AppState>>, bytes: Bytes) -> Result<Json<Value>, ApiError> {
    let req: SweepRequest = body(&bytes)?;
    let levels = match req.levels {
        Some(LevelsSpec::List(v)) => v,
        Some(LevelsSpec::Range(s)) => parse_levels(&s).map_err(ApiError::bad_request)?.0,
        None => parse_levels("50:90:10").expect("default range").0,
    };
    let line = req.line.unwrap_or(SignalLine::Terr);
    let snap = state.snapshot();
    blocking(move || {
        let sc = scenario_with(&snap, &req.scenario)?;
        let sweep = sweep_input_level(&snap.network, &sc, line, &levels)
            .map_err(|e| ApiError::bad_request(e.to_string()))?;
        Ok(Json(json!({ "revision": snap.revision, "sweep": sweep })))
    })
    .await
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct OptimizeRequest {
    budget: Option<usize>,
    seed: Option<u64>,
    #[serde(default)]
    scenario: Scenario,
}

async fn optimize(State(state): State<Arc<AppState>>, bytes: Bytes) -> Result<Response, ApiError> {
    let req: OptimizeRequest = body(&bytes)?;
    let budget = req.budget.unwrap_or(2000);
    if budget == 0 {
        return Err(ApiError::bad_request("budget must be at least 1"));
    }
    let snap = state.snapshot();
    let start = scenario_with(&snap, &req.scenario)?;
    if smatv_core::scenario::regulators(&snap.network).is_empty() {
        return Err(ApiError::bad_request("the network has no regulators"));
    }
    let id = state.next_job.fetch_add(1, Ordering::Relaxed);
    state.jobs.lock().expect("jobs lock").insert(id, (snap.revision, JobState::Running));

    let revision = snap.revision;
    let state2 = state.clone();
    tokio::task::spawn_blocking(move || {
        let outcome = match optimize_gains(&snap.network, &start, budget, req.seed.unwrap_or(0)) {
            Ok(result) => JobState::Done { result },
            Err(e) => JobState::Failed { error: e.to_string() },
        };
        state2.jobs.lock().expect("jobs lock").insert(id, (snap.revision, outcome));
    });
    let body = json!({ "job_id": id, "status": "running", "revision": revision });
    Ok((StatusCode::ACCEPTED, Json(body)).into_response())
}

async fn job(State(state): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> Result<Json<Value>, ApiError> {
    let id: u64 = id.parse().map_err(|_| ApiError::not_found(format!("no job '{id}'")))?;
    let jobs = state.jobs.lock().expect("jobs lock");
    let (revision, job) = jobs.get(&id).ok_or_else(|| ApiError::not_found(format!("no job {id}")))?;
    let mut v = serde_json::to_value(job).expect("job serializes");
    v["job_id"] = json!(id);
    v["revision"] = json!(revision);
    Ok(Json(v))
}

#[derive(Debug, Serialize)]
pub struct TraceSeries {
    pub line: SignalLine,
    pub freq_mhz: Vec<f64>,
    pub level_dbuv: Vec<f64>,
    pub cnr_db: Vec<Cnr>,
    pub limits: BandLimits,
}

#[derive(Debug, Serialize)]
pub struct TraceResponse {
    pub revision: u64,
    pub output: String,
    pub kind: OutputKind,
    pub pass: bool,
    pub series: Vec<TraceSeries>,
    pub violations: Vec<Violation>,
}

/// Per-frequency level and C/N of every line reaching an outlet, with the
/// limits that apply to it. A POST body may carry scenario overrides.
async fn trace(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    bytes: Bytes,
) -> Result<Json<TraceResponse>, ApiError> {
    let overrides: Scenario = body(&bytes)?;
    let snap = state.snapshot();
    let Some(NodeKind::Output(out)) = snap.network.nodes.get(&id).map(|n| &n.kind) else {
        return Err(ApiError::not_found(format!("no output '{id}'")));
    };
    let kind = out.port_kind;
    blocking(move || {
        let sc = scenario_with(&snap, &overrides)?;
        let result = Simulator::new(&snap.network)?.run(&sc)?;
        let report = evaluate(&snap.network, &result);
        let verdict = report.verdict(&id).expect("every output has a verdict").clone();
        let series = SignalLine::ALL
            .iter()
            .filter_map(|line| {
                let t = result.output_trace(&id, *line)?;
                Some(TraceSeries {
                    line: *line,
                    freq_mhz: result.grid.line(*line).iter().map(|f| f.value()).collect(),
                    level_dbuv: t.levels_dbuv.clone(),
                    cnr_db: t.cnr_db.clone(),
                    limits: *snap.network.constraints.band(line.band()),
                })
            })
            .collect();
        Ok(Json(TraceResponse {
            revision: snap.revision,
            output: id,
            kind,
            pass: verdict.pass,
            series,
            violations: verdict.violations,
        }))
    })
    .await
}
