//! HTTP endpoints.
//!
//! | method | path                   | body / result                       |
//! |--------|------------------------|-------------------------------------|
//! | GET    | `/api/registry`        | the tool tree                       |
//! | POST   | `/api/registry/reload` | rescan; needs `x-reload-secret`     |
//! | POST   | `/api/jobs`            | submit; returns id and category     |
//! | GET    | `/api/jobs/{id}`       | job state and finished results      |

use std::sync::Arc;

use axum::extract::{DefaultBodyLimit, Path, State};
use axum::http::{HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use cocoweb_core::registry::ScanWarning;
use cocoweb_core::{
    resolve_tools, scan_registry, validate_selection, FormatCategory, RegistryTree, SelectionWarning, TimeoutPolicy,
};
use parking_lot::RwLock;
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;
use tower_http::services::ServeDir;

use crate::config::{ServiceConfig, MAX_PROBLEM_BYTES};
use crate::cops::{CopsClient, FetchError};
use crate::job::{Job, JobView, ProblemSource, SourceSummary};
use crate::store::{JobStore, MemoryJobStore};
use crate::worker::{WorkItem, Worker};

pub const RELOAD_SECRET_HEADER: &str = "x-reload-secret";

pub struct AppState {
    pub config: ServiceConfig,
    registry: RwLock<Arc<RegistryTree>>,
    pub store: Arc<dyn JobStore>,
    pub cops: CopsClient,
    worker: Worker,
}

impl AppState {
    /// Scans the registry and starts the worker. Config warnings are logged.
    pub fn new(config: ServiceConfig) -> Result<Arc<Self>, cocoweb_core::RegistryError> {
        let report = scan_registry(&config.config_root)?;
        for w in &report.warnings {
            tracing::warn!(path = %w.path.display(), "{}", w.message);
        }
        let store: Arc<dyn JobStore> = Arc::new(MemoryJobStore::new(config.retention));
        let engine = cocoweb_core::Engine::new(&config.bin_root, &config.scratch_dir).with_output_cap(config.output_cap);
        let worker = Worker::spawn(engine, Arc::clone(&store));
        let cops = CopsClient::new(&config.cops_base_url, &config.cops_path_template);
        Ok(Arc::new(AppState { config, registry: RwLock::new(Arc::new(report.tree)), store, cops, worker }))
    }

    pub fn registry(&self) -> Arc<RegistryTree> {
        Arc::clone(&self.registry.read())
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    let mut app = Router::new()
        .route("/api/registry", get(get_registry))
        .route("/api/registry/reload", post(reload_registry))
        .route("/api/jobs", post(submit_job))
        .route("/api/jobs/{id}", get(get_job))
        .layer(DefaultBodyLimit::max(4 * MAX_PROBLEM_BYTES));
    if let Some(dir) = &state.config.static_dir {
        app = app.fallback_service(ServeDir::new(dir));
    }
    app.with_state(state)
}

#[derive(Debug, Error)]
pub enum ApiError {
    #[error("{0}")]
    BadRequest(String),
    #[error("problem text exceeds {MAX_PROBLEM_BYTES} bytes")]
    TooLarge,
    #[error("unknown tool ids: {}", .0.join(", "))]
    UnknownTools(Vec<String>),
    #[error("no such job")]
    NotFound,
    #[error("missing or wrong reload secret")]
    Unauthorized,
    #[error(transparent)]
    Upstream(#[from] FetchError),
    #[error("registry scan failed: {0}")]
    Scan(String),
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = match &self {
            ApiError::BadRequest(_) | ApiError::UnknownTools(_) => StatusCode::BAD_REQUEST,
            ApiError::Upstream(FetchError::InvalidNumber) => StatusCode::BAD_REQUEST,
            ApiError::TooLarge => StatusCode::PAYLOAD_TOO_LARGE,
            ApiError::NotFound => StatusCode::NOT_FOUND,
            ApiError::Unauthorized => StatusCode::UNAUTHORIZED,
            ApiError::Upstream(_) => StatusCode::BAD_GATEWAY,
            ApiError::Scan(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        let mut body = json!({ "error": self.to_string() });
        if let ApiError::UnknownTools(ids) = &self {
            body["unknown_tools"] = json!(ids);
        }
        (status, Json(body)).into_response()
    }
}

async fn get_registry(State(state): State<Arc<AppState>>) -> Json<RegistryTree> {
    Json(state.registry().as_ref().clone())
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ReloadSummary {
    pub tools: usize,
    pub warnings: Vec<ScanWarning>,
}

async fn reload_registry(
    State(state): State<Arc<AppState>>,
    headers: HeaderMap,
) -> Result<Json<ReloadSummary>, ApiError> {
    let given = headers.get(RELOAD_SECRET_HEADER).and_then(|v| v.to_str().ok());
    match (&state.config.reload_secret, given) {
        (Some(secret), Some(g)) if secret == g => {}
        _ => return Err(ApiError::Unauthorized),
    }
    let root = state.config.config_root.clone();
    let report = tokio::task::spawn_blocking(move || scan_registry(&root))
        .await
        .map_err(|e| ApiError::Scan(e.to_string()))?
        .map_err(|e| ApiError::Scan(e.to_string()))?;
    let tools = report.tree.len();
    *state.registry.write() = Arc::new(report.tree);
    Ok(Json(ReloadSummary { tools, warnings: report.warnings }))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SubmitRequest {
    pub problem_source: ProblemSource,
    pub tool_ids: Vec<String>,
    #[serde(default)]
    pub timeout_policy: Option<TimeoutPolicy>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SubmitResponse {
    pub id: String,
    pub category: FormatCategory,
    pub warnings: Vec<SelectionWarning>,
    /// Set when the problem does not parse; tools still receive it unchanged.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parse_error: Option<String>,
}

fn check_text(text: &str) -> Result<(), ApiError> {
    if text.len() > MAX_PROBLEM_BYTES {
        return Err(ApiError::TooLarge);
    }
    if text.trim().is_empty() {
        return Err(ApiError::BadRequest("problem text is empty".into()));
    }
    Ok(())
}

async fn submit_job(
    State(state): State<Arc<AppState>>,
    Json(req): Json<SubmitRequest>,
) -> Result<(StatusCode, Json<SubmitResponse>), ApiError> {
    if req.tool_ids.is_empty() {
        return Err(ApiError::BadRequest("select at least one tool".into()));
    }
    let policy = match req.timeout_policy {
        None => TimeoutPolicy::default(),
        Some(p) => p.validated().map_err(|e| ApiError::BadRequest(e.to_string()))?,
    };
    if policy.soft_s > state.config.max_soft_timeout {
        return Err(ApiError::BadRequest(format!(
            "soft timeout {} exceeds the maximum of {}",
            policy.soft_s, state.config.max_soft_timeout
        )));
    }
    let tools = resolve_tools(&req.tool_ids, &state.registry()).map_err(|e| ApiError::UnknownTools(e.0))?;

    let source = SourceSummary::from(&req.problem_source);
    let text = match req.problem_source {
        ProblemSource::Inline { text } => text,
        ProblemSource::Upload { filename, text } => {
            if filename.is_empty() {
                return Err(ApiError::BadRequest("upload without a filename".into()));
            }
            text
        }
        ProblemSource::Database { number } => state.cops.fetch(number).await?,
    };
    check_text(&text)?;

    let job = Job::new(source, text, tools.iter().map(|t| t.id.clone()).collect(), policy);
    let parse_error = match cocoweb_core::parse_problem(&job.problem_text) {
        Ok(_) => None,
        Err(e) => Some(e.to_string()),
    };
    let response = SubmitResponse {
        id: job.id.clone(),
        category: job.category,
        warnings: validate_selection(job.category, &tools),
        parse_error,
    };
    let item = WorkItem { job_id: job.id.clone(), tools, problem_text: job.problem_text.clone(), policy };
    state.store.insert(job);
    state.worker.enqueue(item);
    Ok((StatusCode::ACCEPTED, Json(response)))
}

async fn get_job(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Json<JobView>, ApiError> {
    state.store.view(&id).map(Json).ok_or(ApiError::NotFound)
}
