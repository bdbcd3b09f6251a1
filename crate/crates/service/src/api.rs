use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::{Arc, RwLock};

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use narrative_core::corpus::{parse_timed_words_json, parse_trace_json, serialize_narrative};
use narrative_core::sync::DEFAULT_QC_THRESHOLD;
use serde::Deserialize;
use serde_json::{json, Value};
use tokio::sync::Mutex;
use tower_http::services::ServeDir;

use crate::session::{Session, SessionError};
use crate::store::Store;

#[derive(Debug, Clone)]
pub struct Config {
    pub dataset_id: String,
    pub default_threshold: f64,
    pub static_dir: Option<PathBuf>,
}

impl Default for Config {
    fn default() -> Self {
        Self { dataset_id: "live".into(), default_threshold: DEFAULT_QC_THRESHOLD, static_dir: None }
    }
}

/// Shared service state. Each session has its own lock, so requests on
/// different sessions never wait on each other.
#[derive(Clone)]
pub struct AppState {
    inner: Arc<Inner>,
}

struct Inner {
    config: Config,
    store: Store,
    sessions: RwLock<HashMap<String, Arc<Mutex<Session>>>>,
}

impl AppState {
    pub fn new(store: Store, config: Config) -> Self {
        Self { inner: Arc::new(Inner { config, store, sessions: RwLock::new(HashMap::new()) }) }
    }

    pub fn store(&self) -> &Store {
        &self.inner.store
    }

    fn session(&self, id: &str) -> Result<Arc<Mutex<Session>>, ApiError> {
        self.inner
            .sessions
            .read()
            .expect("session map poisoned")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::NotFound(format!("no session `{id}`")))
    }
}

#[derive(Debug)]
pub enum ApiError {
    BadRequest(String),
    NotFound(String),
    Conflict(String),
    Unprocessable(String),
    Internal(String),
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        match e {
            SessionError::EmptyImageRef => ApiError::BadRequest(e.to_string()),
            SessionError::WrongState { .. } => ApiError::Conflict(e.to_string()),
            SessionError::InvalidCapture(_) | SessionError::Pipeline(_) => ApiError::Unprocessable(e.to_string()),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, msg) = match self {
            ApiError::BadRequest(m) => (StatusCode::BAD_REQUEST, m),
            ApiError::NotFound(m) => (StatusCode::NOT_FOUND, m),
            ApiError::Conflict(m) => (StatusCode::CONFLICT, m),
            ApiError::Unprocessable(m) => (StatusCode::UNPROCESSABLE_ENTITY, m),
            ApiError::Internal(m) => (StatusCode::INTERNAL_SERVER_ERROR, m),
        };
        (status, Json(json!({ "error": msg }))).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

/// Reads a JSON object body; an empty body counts as `{}`.
fn json_body(body: &Bytes) -> ApiResult<serde_json::Map<String, Value>> {
    if body.iter().all(u8::is_ascii_whitespace) {
        return Ok(serde_json::Map::new());
    }
    match serde_json::from_slice(body) {
        Ok(Value::Object(m)) => Ok(m),
        Ok(_) => Err(ApiError::BadRequest("request body must be a JSON object".into())),
        Err(e) => Err(ApiError::BadRequest(format!("malformed JSON: {e}"))),
    }
}

fn str_field<'a>(body: &'a serde_json::Map<String, Value>, key: &str) -> ApiResult<Option<&'a str>> {
    match body.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(Value::String(s)) => Ok(Some(s)),
        Some(_) => Err(ApiError::BadRequest(format!("`{key}` must be a string"))),
    }
}

fn session_json(s: &Session) -> Value {
    json!({ "session_id": s.id, "image_ref": s.image_ref, "state": s.state.as_str() })
}

async fn create_session(State(app): State<AppState>, body: Bytes) -> ApiResult<(StatusCode, Json<Value>)> {
    let body = json_body(&body)?;
    let image_ref = str_field(&body, "image_ref")?.unwrap_or("");
    let annotator_id = str_field(&body, "annotator_id")?.unwrap_or("");
    let id = uuid::Uuid::new_v4().simple().to_string();
    let session = Session::new(id.clone(), image_ref, annotator_id)?;
    let view = session_json(&session);
    app.inner
        .sessions
        .write()
        .expect("session map poisoned")
        .insert(id, Arc::new(Mutex::new(session)));
    Ok((StatusCode::CREATED, Json(view)))
}

async fn get_session(State(app): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let session = app.session(&id)?;
    let s = session.lock().await;
    Ok(Json(session_json(&s)))
}

async fn submit_capture(
    State(app): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<Json<Value>> {
    let session = app.session(&id)?;
    let body = json_body(&body)?;
    let trace = body
        .get("trace")
        .ok_or_else(|| ApiError::Unprocessable("missing `trace`".into()))
        .and_then(|v| parse_trace_json(&v.to_string()).map_err(|e| ApiError::Unprocessable(e.to_string())))?;
    let automatic = match body.get("automatic_transcript") {
        None | Some(Value::Null) => narrative_core::AutomaticTranscript::new(Vec::new()).expect("empty transcript"),
        Some(v) => parse_timed_words_json(&v.to_string()).map_err(|e| ApiError::Unprocessable(e.to_string()))?,
    };
    let mut s = session.lock().await;
    s.capture(trace, automatic)?;
    Ok(Json(session_json(&s)))
}

async fn submit_transcript(
    State(app): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<Json<Value>> {
    let session = app.session(&id)?;
    let body = json_body(&body)?;
    let caption = str_field(&body, "caption")?.ok_or_else(|| ApiError::BadRequest("missing `caption`".into()))?;
    let mut s = session.lock().await;
    s.transcribe(caption)?;
    Ok(Json(session_json(&s)))
}

async fn finalize(State(app): State<AppState>, Path(id): Path<String>, body: Bytes) -> ApiResult<Response> {
    let session = app.session(&id)?;
    let body = json_body(&body)?;
    let threshold = match body.get("threshold") {
        None | Some(Value::Null) => app.inner.config.default_threshold,
        Some(v) => v
            .as_f64()
            .filter(|t| *t >= 0.0)
            .ok_or_else(|| ApiError::BadRequest("`threshold` must be a number >= 0".into()))?,
    };
    // held across build and persist: exactly one narrative per session
    let mut s = session.lock().await;
    let narrative = s.build(&app.inner.config.dataset_id, threshold)?;
    let line = serialize_narrative(&narrative).map_err(|e| ApiError::Unprocessable(e.to_string()))?;
    let stored = app
        .inner
        .store
        .append(&narrative)
        .map_err(|e| ApiError::Internal(format!("could not persist narrative: {e}")))?;
    s.mark_finalized();
    let body = format!(
        "{{\"session_id\":{},\"stored\":{stored},\"narrative\":{line}}}",
        serde_json::to_string(&s.id).expect("string")
    );
    Ok(([(header::CONTENT_TYPE, "application/json")], body).into_response())
}

#[derive(Debug, Deserialize)]
struct ListQuery {
    image_id: Option<String>,
    pass: Option<bool>,
}

async fn list_narratives(State(app): State<AppState>, Query(q): Query<ListQuery>) -> Response {
    let lines = app.inner.store.list(q.image_id.as_deref(), q.pass);
    let mut body = String::with_capacity(lines.iter().map(|l| l.len() + 1).sum());
    for l in lines {
        body.push_str(&l);
        body.push('\n');
    }
    ([(header::CONTENT_TYPE, "application/x-ndjson")], body).into_response()
}

pub fn router(state: AppState) -> Router {
    let static_dir = state.inner.config.static_dir.clone();
    let api = Router::new()
        .route("/api/sessions", post(create_session))
        .route("/api/sessions/{id}", get(get_session))
        .route("/api/sessions/{id}/capture", post(submit_capture))
        .route("/api/sessions/{id}/transcript", post(submit_transcript))
        .route("/api/sessions/{id}/finalize", post(finalize))
        .route("/api/narratives", get(list_narratives))
        .with_state(state);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}
