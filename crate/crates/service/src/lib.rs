//! HTTP API over the recovery orchestrator.
//!
//! Alerts for all networks go through one pipeline at a time. Planning runs on a
//! blocking thread against a snapshot, so listings and plan lookups stay responsive
//! while a search is in progress.

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex, RwLock, RwLockReadGuard, RwLockWriteGuard};

use axum::body::Bytes;
use axum::extract::{Path, Query, Request, State};
use axum::http::{header, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;
use tokio::net::TcpListener;

use gridheal_core::cbr::{
    Attribute, AttributeVector, Case, CbrError, NetworkState, Problem, Query as CaseQuery, RetrieveOptions,
    SimilarityMode, SimilarityWeights,
};
use gridheal_core::ingest::{parse_network, NetworkFormat};
use gridheal_core::orchestrator::{Alert, Mode, NetworkId, Orchestrator, OrchestratorError, PlanId};
use gridheal_core::store::CaseBase;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("cannot listen on {addr}: {source}")]
    Bind { addr: String, source: std::io::Error },
    #[error("server failed: {0}")]
    Io(#[from] std::io::Error),
}

impl ServiceError {
    pub fn code(&self) -> &'static str {
        match self {
            ServiceError::Bind { .. } => "BindError",
            ServiceError::Io(_) => "StorageError",
        }
    }
}

/// Error body returned by every endpoint: `{code, message, detail}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiError {
    #[serde(skip)]
    pub status: u16,
    pub code: String,
    pub message: String,
    #[serde(default)]
    pub detail: Value,
}

impl ApiError {
    fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        ApiError {
            status: status.as_u16(),
            code: code.into(),
            message: message.into(),
            detail: Value::Null,
        }
    }

    fn with_detail(mut self, detail: Value) -> Self {
        self.detail = detail;
        self
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, Json(self)).into_response()
    }
}

fn status_for(code: &str) -> StatusCode {
    match code {
        "UnknownPlan" | "UnknownNetwork" | "UnknownCase" => StatusCode::NOT_FOUND,
        "NotPending" | "Cancelled" => StatusCode::CONFLICT,
        "Unrecoverable" | "NoFeasibleTopology" => StatusCode::UNPROCESSABLE_ENTITY,
        "StorageError" | "LedgerInconsistent" => StatusCode::INTERNAL_SERVER_ERROR,
        _ => StatusCode::BAD_REQUEST,
    }
}

impl From<OrchestratorError> for ApiError {
    fn from(e: OrchestratorError) -> Self {
        let detail = match &e {
            OrchestratorError::NotPending { id, status } => json!({ "plan": id, "status": status }),
            OrchestratorError::UnknownPlan(id) => json!({ "plan": id }),
            OrchestratorError::UnknownNetwork(id) => json!({ "network": id }),
            _ => Value::Null,
        };
        ApiError::new(status_for(e.code()), e.code(), e.to_string()).with_detail(detail)
    }
}

impl From<CbrError> for ApiError {
    fn from(e: CbrError) -> Self {
        ApiError::new(status_for(e.code()), e.code(), e.to_string())
    }
}

fn parse_body<T: DeserializeOwned>(body: &[u8]) -> Result<T, ApiError> {
    let mut de = serde_json::Deserializer::from_slice(body);
    serde_path_to_error::deserialize(&mut de).map_err(|e| {
        ApiError::new(StatusCode::BAD_REQUEST, "InvalidRequest", e.inner().to_string())
            .with_detail(json!({ "path": e.path().to_string() }))
    })
}

#[derive(Debug, Clone, Default)]
pub struct ServiceOptions {
    /// Case base file, loaded at start and written after every change and on shutdown.
    pub case_path: Option<PathBuf>,
    /// When set, requests must carry `Authorization: Bearer <token>`.
    pub token: Option<String>,
}

pub struct AppState {
    orch: RwLock<Orchestrator>,
    pipeline: tokio::sync::Mutex<()>,
    running: Mutex<Option<Arc<AtomicBool>>>,
    options: ServiceOptions,
}

impl AppState {
    pub fn new(orch: Orchestrator, options: ServiceOptions) -> Arc<Self> {
        Arc::new(AppState {
            orch: RwLock::new(orch),
            pipeline: tokio::sync::Mutex::new(()),
            running: Mutex::new(None),
            options,
        })
    }

    pub fn read(&self) -> RwLockReadGuard<'_, Orchestrator> {
        self.orch.read().unwrap_or_else(|e| e.into_inner())
    }

    fn write(&self) -> RwLockWriteGuard<'_, Orchestrator> {
        self.orch.write().unwrap_or_else(|e| e.into_inner())
    }

    /// Write the case base to its file, if one is configured.
    pub fn persist(&self) -> Result<(), ApiError> {
        let Some(path) = &self.options.case_path else { return Ok(()) };
        let base = self.read().cases().clone();
        base.save(path)
            .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.code(), e.to_string()))
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/networks", post(upload_network).get(list_networks))
        .route("/networks/{id}/state", get(network_state))
        .route("/alerts", post(submit_alert))
        .route("/alerts/cancel", post(cancel_alert))
        .route("/retrieve", post(retrieve))
        .route("/plans", get(list_plans))
        .route("/plans/{id}", get(get_plan))
        .route("/plans/{id}/approval", post(approve_plan))
        .route("/cases", get(list_cases))
        .fallback(|| async { ApiError::new(StatusCode::NOT_FOUND, "NotFound", "no such endpoint") })
        .layer(middleware::from_fn_with_state(state.clone(), authorize))
        .with_state(state)
}

async fn authorize(State(state): State<Arc<AppState>>, req: Request, next: Next) -> Response {
    if let Some(token) = &state.options.token {
        let presented = req
            .headers()
            .get(header::AUTHORIZATION)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.strip_prefix("Bearer "));
        if presented != Some(token.as_str()) {
            return ApiError::new(StatusCode::UNAUTHORIZED, "Unauthorized", "missing or wrong bearer token").into_response();
        }
    }
    next.run(req).await
}

#[derive(Debug, Deserialize)]
struct UploadParams {
    format: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct NetworkSummary {
    pub id: NetworkId,
    pub buses: usize,
    pub branches: usize,
    pub switches: usize,
}

fn summary(id: NetworkId, orch: &Orchestrator) -> NetworkSummary {
    let net = orch.network(id).expect("listed networks exist");
    NetworkSummary {
        id,
        buses: net.bus_count(),
        branches: net.branch_count(),
        switches: net.branches().iter().filter(|b| b.switchable).count(),
    }
}

async fn upload_network(
    State(state): State<Arc<AppState>>,
    Query(params): Query<UploadParams>,
    body: Bytes,
) -> Result<(StatusCode, Json<NetworkSummary>), ApiError> {
    let format = params
        .format
        .map(|f| f.parse::<NetworkFormat>())
        .transpose()
        .map_err(|m| ApiError::new(StatusCode::BAD_REQUEST, "InvalidRequest", m))?;
    let text = std::str::from_utf8(&body)
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "InvalidRequest", format!("body is not UTF-8: {e}")))?;
    let net = parse_network(text, format).map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, e.code(), e.to_string()))?;
    let mut orch = state.write();
    let id = orch.add_network(net);
    Ok((StatusCode::CREATED, Json(summary(id, &orch))))
}

async fn list_networks(State(state): State<Arc<AppState>>) -> Json<Vec<NetworkSummary>> {
    let orch = state.read();
    Json(orch.network_ids().map(|id| summary(id, &orch)).collect())
}

async fn network_state(State(state): State<Arc<AppState>>, Path(id): Path<NetworkId>) -> Result<Json<Value>, ApiError> {
    let orch = state.read();
    let s = orch.state(id).ok_or(OrchestratorError::UnknownNetwork(id))?;
    let mut v = serde_json::to_value(s).expect("state serializes");
    v["network"] = json!(id);
    Ok(Json(v))
}

#[derive(Debug, Deserialize)]
struct AlertParams {
    mode: Option<String>,
}

async fn submit_alert(
    State(state): State<Arc<AppState>>,
    Query(params): Query<AlertParams>,
    body: Bytes,
) -> Result<Response, ApiError> {
    let alert: Alert = parse_body(&body)?;
    let mode = params
        .mode
        .map(|m| m.parse::<Mode>())
        .transpose()
        .map_err(|m| ApiError::new(StatusCode::BAD_REQUEST, "InvalidRequest", m))?;

    let _turn = state.pipeline.lock().await;
    let (snapshot, mode) = {
        let orch = state.read();
        let id = orch.resolve(&alert)?;
        (orch.snapshot(id)?, mode.unwrap_or(orch.config().mode))
    };
    let cancel = Arc::new(AtomicBool::new(false));
    *state.running.lock().unwrap_or_else(|e| e.into_inner()) = Some(cancel.clone());
    let planned = {
        let alert = alert.clone();
        let cancel = cancel.clone();
        tokio::task::spawn_blocking(move || snapshot.planner().prepare(&alert, Some(&cancel))).await
    };
    *state.running.lock().unwrap_or_else(|e| e.into_inner()) = None;
    let prepared = planned
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "Internal", e.to_string()))??;
    if cancel.load(Ordering::Relaxed) {
        return Err(OrchestratorError::Cancelled.into());
    }
    let plan = state.write().commit(prepared, mode)?;
    if mode == Mode::Autonomous {
        state.persist()?;
    }
    Ok((StatusCode::CREATED, Json(plan)).into_response())
}

async fn cancel_alert(State(state): State<Arc<AppState>>) -> Json<Value> {
    let running = state.running.lock().unwrap_or_else(|e| e.into_inner());
    if let Some(flag) = running.as_ref() {
        flag.store(true, Ordering::Relaxed);
    }
    Json(json!({ "cancelled": running.is_some() }))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RetrieveRequest {
    /// Attribute name to value; the three attributes are required.
    attributes: BTreeMap<String, f64>,
    #[serde(default)]
    weights: BTreeMap<String, f64>,
    threshold: Option<f64>,
    limit: Option<usize>,
    mode: Option<SimilarityMode>,
    /// Structural filter; both absent means attributes only.
    state: Option<NetworkState>,
    problem: Option<Problem>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RetrievedCase {
    pub similarity: f64,
    pub case: Case,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RetrieveResponse {
    pub revision: u64,
    pub results: Vec<RetrievedCase>,
}

async fn retrieve(State(state): State<Arc<AppState>>, body: Bytes) -> Result<Json<RetrieveResponse>, ApiError> {
    let req: RetrieveRequest = parse_body(&body)?;
    let orch = state.read();
    let config = orch.config();
    let mut weights = if req.weights.is_empty() {
        config.weights
    } else {
        SimilarityWeights::new(0.0, 0.0, 0.0)
    };
    for (name, &value) in &req.weights {
        let attr = Attribute::parse(name).ok_or_else(|| CbrError::AttributeMismatch(format!("unknown attribute {name:?}")))?;
        weights.set(attr, value);
    }
    let threshold = req.threshold.unwrap_or(config.threshold);
    if !(0.0..=1.0).contains(&threshold) {
        return Err(ApiError::new(StatusCode::BAD_REQUEST, "InvalidRequest", "threshold must lie in [0, 1]"));
    }
    let query = CaseQuery {
        state: req.state,
        problem: req.problem,
        attributes: AttributeVector::from_named(&req.attributes)?,
    };
    let opts = RetrieveOptions {
        threshold,
        weights,
        limit: req.limit.unwrap_or(10),
        mode: req.mode.unwrap_or(config.similarity_mode),
    };
    let base = orch.cases();
    let results = base
        .retrieve(&query, &opts)?
        .into_iter()
        .map(|s| RetrievedCase {
            similarity: s.similarity,
            case: base.get(s.case_id).expect("retrieved from this base").clone(),
        })
        .collect();
    Ok(Json(RetrieveResponse {
        revision: base.revision(),
        results,
    }))
}

async fn list_plans(State(state): State<Arc<AppState>>) -> Json<Value> {
    let orch = state.read();
    Json(json!(orch.plans().collect::<Vec<_>>()))
}

async fn get_plan(State(state): State<Arc<AppState>>, Path(id): Path<PlanId>) -> Result<Json<Value>, ApiError> {
    let orch = state.read();
    let plan = orch.plan(id).ok_or(OrchestratorError::UnknownPlan(id))?;
    Ok(Json(json!(plan)))
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Approve,
    Reject,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ApprovalRequest {
    decision: Decision,
}

async fn approve_plan(
    State(state): State<Arc<AppState>>,
    Path(id): Path<PlanId>,
    body: Bytes,
) -> Result<Json<Value>, ApiError> {
    let req: ApprovalRequest = parse_body(&body)?;
    let plan = state.write().approve(id, matches!(req.decision, Decision::Approve))?;
    if matches!(req.decision, Decision::Approve) {
        state.persist()?;
    }
    Ok(Json(json!(plan)))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CaseListing {
    pub revision: u64,
    pub capacity: Option<usize>,
    pub cases: Vec<Case>,
}

async fn list_cases(State(state): State<Arc<AppState>>) -> Json<CaseListing> {
    let orch = state.read();
    let base = orch.cases();
    Json(CaseListing {
        revision: base.revision(),
        capacity: base.capacity(),
        cases: base.cases().to_vec(),
    })
}

pub async fn bind(addr: &str) -> Result<TcpListener, ServiceError> {
    TcpListener::bind(addr).await.map_err(|source| ServiceError::Bind {
        addr: addr.to_string(),
        source,
    })
}

/// Serve until `shutdown` resolves, then write the case base.
pub async fn serve<F>(listener: TcpListener, state: Arc<AppState>, shutdown: F) -> Result<(), ServiceError>
where
    F: std::future::Future<Output = ()> + Send + 'static,
{
    let local: Option<SocketAddr> = listener.local_addr().ok();
    log::info!("listening on {local:?}");
    axum::serve(listener, router(state.clone()))
        .with_graceful_shutdown(shutdown)
        .await?;
    if let Err(e) = state.persist() {
        log::error!("case base not saved on shutdown: {}", e.message);
        return Err(ServiceError::Io(std::io::Error::other(e.message)));
    }
    Ok(())
}

/// Load the case base from `options.case_path` (empty when the file is missing).
pub fn load_cases(options: &ServiceOptions) -> Result<CaseBase, gridheal_core::store::StoreError> {
    match &options.case_path {
        Some(path) => CaseBase::open(path),
        None => Ok(CaseBase::default()),
    }
}
