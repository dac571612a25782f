//! JSON API.
//!
//! Every error body has the shape `{"errors": [{"field": ..., "rule": ...}]}`;
//! command parse errors add a 1-based `position`.
//! Malformed JSON is 400; well-formed bodies that break a rule are 422.

use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use blimp_core::design::FieldViolation;
use blimp_core::design::DesignFile;
use blimp_core::mapping::{
    parse_command, JoystickInput, MappingCommand, MixError, Plant, RemapError, Stage, Verdicts,
};
use blimp_core::sim::csv::to_csv_string;
use blimp_core::sim::session::Pacing;
use blimp_core::sim::{SessionError, SessionId, SessionManager, SessionSnapshot};
use blimp_core::{parse_design, DesignError, DesignSpec, SimConfig};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::report::{evaluate, Evaluation};
use crate::store::{DesignStore, StoreError, StoredDesign};

pub struct AppState {
    pub store: DesignStore,
    pub sessions: SessionManager,
}

impl AppState {
    pub fn new(store: DesignStore, pacing: Pacing) -> Arc<Self> {
        Arc::new(Self { store, sessions: SessionManager::new(pacing) })
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/api/designs", post(create_design).get(list_designs))
        .route("/api/designs/{id}", get(get_design))
        .route("/api/designs/{id}/file", get(get_design_file))
        .route("/api/designs/{id}/evaluation", get(get_evaluation))
        .route("/api/sim/sessions", post(create_session).get(list_sessions))
        .route("/api/sim/sessions/{id}", axum::routing::delete(delete_session))
        .route("/api/sim/sessions/{id}/input", post(session_input))
        .route("/api/sim/sessions/{id}/state", get(session_state))
        .route("/api/sim/sessions/{id}/remap", post(session_remap))
        .route("/api/sim/sessions/{id}/trajectory.csv", get(session_csv))
        .with_state(state)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorEntry {
    pub field: String,
    pub rule: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub position: Option<usize>,
}

impl From<FieldViolation> for ErrorEntry {
    fn from(v: FieldViolation) -> Self {
        Self { field: v.field, rule: v.rule, position: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub errors: Vec<ErrorEntry>,
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    errors: Vec<ErrorEntry>,
}

impl ApiError {
    fn new(status: StatusCode, field: impl Into<String>, rule: impl Into<String>) -> Self {
        Self { status, errors: vec![ErrorEntry { field: field.into(), rule: rule.into(), position: None }] }
    }

    fn not_found(what: &str, id: impl std::fmt::Display) -> Self {
        Self::new(StatusCode::NOT_FOUND, "id", format!("no {what} with id {id}"))
    }

    fn internal(e: impl std::fmt::Display) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "", e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(ErrorBody { errors: self.errors })).into_response()
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        Self::internal(e)
    }
}

impl From<DesignError> for ApiError {
    fn from(e: DesignError) -> Self {
        match e {
            DesignError::Syntax { .. } => Self::new(StatusCode::BAD_REQUEST, "", e.to_string()),
            other => Self {
                status: StatusCode::UNPROCESSABLE_ENTITY,
                errors: other.violations().into_iter().map(ErrorEntry::from).collect(),
            },
        }
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        match &e {
            SessionError::UnknownSession(id) => Self::not_found("session", id),
            SessionError::Input(MixError::OutOfRange { input, .. }) => {
                Self::new(StatusCode::UNPROCESSABLE_ENTITY, *input, e.to_string())
            }
            SessionError::Remap(RemapError::AlreadyDone) => Self::new(StatusCode::CONFLICT, "command", e.to_string()),
            SessionError::Remap(RemapError::UnwiredChannel(_) | RemapError::UnwiredServos(..)) => {
                Self::new(StatusCode::UNPROCESSABLE_ENTITY, "command", e.to_string())
            }
            SessionError::Sim(_) => Self::new(StatusCode::UNPROCESSABLE_ENTITY, "config", e.to_string()),
            _ => Self::internal(e),
        }
    }
}

type ApiResult<T> = Result<T, ApiError>;

/// Parses a JSON body: syntax errors are 400, shape errors 422 with a field path.
fn json_body<T: DeserializeOwned>(bytes: &[u8]) -> ApiResult<T> {
    let mut de = serde_json::Deserializer::from_slice(bytes);
    let value = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        if inner.is_data() {
            ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, if path == "." { String::new() } else { path }, inner.to_string())
        } else {
            ApiError::new(StatusCode::BAD_REQUEST, "", format!("malformed JSON: {inner}"))
        }
    })?;
    de.end().map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "", format!("malformed JSON: {e}")))?;
    Ok(value)
}

/// Runs a call that waits on a session thread off the async workers.
async fn blocking<T: Send + 'static>(f: impl FnOnce() -> T + Send + 'static) -> ApiResult<T> {
    tokio::task::spawn_blocking(f).await.map_err(ApiError::internal)
}

fn now_unix() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationBundle {
    pub design_id: String,
    pub name: String,
    pub hash: String,
    pub created_unix: u64,
    pub evaluated_unix: u64,
    #[serde(flatten)]
    pub evaluation: Evaluation,
}

fn bundle(entry: &StoredDesign, design: &DesignSpec) -> ApiResult<EvaluationBundle> {
    let evaluation = evaluate(design)
        .map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "balloon", e.to_string()))?;
    Ok(EvaluationBundle {
        design_id: entry.id.clone(),
        name: entry.name.clone(),
        hash: entry.hash.clone(),
        created_unix: entry.created_unix,
        evaluated_unix: now_unix(),
        evaluation,
    })
}

fn is_toml(headers: &HeaderMap) -> bool {
    headers
        .get(header::CONTENT_TYPE)
        .and_then(|v| v.to_str().ok())
        .is_some_and(|ct| ct.starts_with("application/toml") || ct.starts_with("text/plain"))
}

/// Accepts the design as JSON (the design file layout) or as TOML text.
async fn create_design(State(app): State<Arc<AppState>>, headers: HeaderMap, body: Bytes) -> ApiResult<Response> {
    let design = if is_toml(&headers) {
        let text = std::str::from_utf8(&body)
            .map_err(|_| ApiError::new(StatusCode::BAD_REQUEST, "", "body is not UTF-8"))?;
        parse_design(text)?
    } else {
        json_body::<DesignFile>(&body)?.into_spec()?
    };
    // Reject designs whose envelope cannot be evaluated before storing them.
    evaluate(&design).map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "balloon", e.to_string()))?;
    let (entry, created) = app.store.put(&design)?;
    let status = if created { StatusCode::CREATED } else { StatusCode::OK };
    Ok((status, Json(bundle(&entry, &design)?)).into_response())
}

async fn list_designs(State(app): State<Arc<AppState>>) -> Json<Vec<StoredDesign>> {
    Json(app.store.list())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignDocument {
    #[serde(flatten)]
    pub entry: StoredDesign,
    pub design: DesignFile,
}

fn load(app: &AppState, id: &str) -> ApiResult<(StoredDesign, DesignSpec)> {
    app.store.get(id)?.ok_or_else(|| ApiError::not_found("design", id))
}

async fn get_design(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Json<DesignDocument>> {
    let (entry, design) = load(&app, &id)?;
    Ok(Json(DesignDocument { entry, design: DesignFile::from(&design) }))
}

async fn get_design_file(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Response> {
    let text = app.store.text(&id)?.ok_or_else(|| ApiError::not_found("design", &id))?;
    Ok(([(header::CONTENT_TYPE, "application/toml")], text).into_response())
}

async fn get_evaluation(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Json<EvaluationBundle>> {
    let (entry, design) = load(&app, &id)?;
    Ok(Json(bundle(&entry, &design)?))
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateSession {
    design_id: String,
    /// Hidden wiring as `[channel, thruster, polarity]`; identity when absent.
    #[serde(default)]
    wiring: Option<Vec<(u8, u8, i8)>>,
    #[serde(default)]
    config: Option<SimConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionCreated {
    pub session_id: SessionId,
    pub state: SessionSnapshot,
}

fn session_id(raw: &str) -> ApiResult<SessionId> {
    raw.parse().map_err(|_| ApiError::not_found("session", raw))
}

async fn create_session(State(app): State<Arc<AppState>>, body: Bytes) -> ApiResult<Response> {
    let req: CreateSession = json_body(&body)?;
    let (_, design) = load(&app, &req.design_id)?;
    let plant = match &req.wiring {
        None => Plant::identity(&design),
        Some(w) => Plant::wired(&design, w)
            .map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "wiring", e.to_string()))?,
    };
    let id = app.sessions.create(design, plant, req.config.unwrap_or_default())?;
    let state = app.sessions.state(id)?;
    Ok((StatusCode::CREATED, Json(SessionCreated { session_id: id, state })).into_response())
}

async fn list_sessions(State(app): State<Arc<AppState>>) -> Json<Vec<SessionId>> {
    Json(app.sessions.ids())
}

async fn delete_session(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<StatusCode> {
    let id = session_id(&id)?;
    blocking(move || app.sessions.remove(id)).await??;
    Ok(StatusCode::NO_CONTENT)
}

async fn session_input(State(app): State<Arc<AppState>>, Path(id): Path<String>, body: Bytes) -> ApiResult<StatusCode> {
    let id = session_id(&id)?;
    // Unknown sessions are 404 even when the body is bad.
    app.sessions.state(id)?;
    let input: JoystickInput = json_body(&body)?;
    app.sessions.input(id, input)?;
    Ok(StatusCode::NO_CONTENT)
}

async fn session_state(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Json<SessionSnapshot>> {
    Ok(Json(app.sessions.state(session_id(&id)?)?))
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RemapRequest {
    command: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemapResponse {
    pub command: String,
    pub parsed: MappingCommand,
    pub verdicts: Verdicts,
    pub stage: Stage,
}

async fn session_remap(State(app): State<Arc<AppState>>, Path(id): Path<String>, body: Bytes) -> ApiResult<Json<RemapResponse>> {
    let id = session_id(&id)?;
    app.sessions.state(id)?;
    let req: RemapRequest = json_body(&body)?;
    let parsed = parse_command(&req.command).map_err(|e| ApiError {
        status: StatusCode::UNPROCESSABLE_ENTITY,
        errors: vec![ErrorEntry { field: "command".into(), rule: e.kind.to_string(), position: Some(e.position) }],
    })?;
    let worker = Arc::clone(&app);
    let verdicts = blocking(move || worker.sessions.remap(id, parsed)).await??;
    let stage = app.sessions.state(id)?.stage;
    Ok(Json(RemapResponse { command: parsed.render(), parsed, verdicts, stage }))
}

async fn session_csv(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Response> {
    let trajectory = app.sessions.trajectory(session_id(&id)?)?;
    Ok(([(header::CONTENT_TYPE, "text/csv")], to_csv_string(&trajectory)).into_response())
}
