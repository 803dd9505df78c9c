//! HTTP front end for the suggestion engine.
//!
//! | method | path | body | reply |
//! |---|---|---|---|
//! | GET | `/api/health` | | `{status, model_loaded}` |
//! | POST | `/api/suggest` | `{source, has_output?, output_kind?}` | `{candidates, warnings}` |
//! | GET | `/api/notebook?path=` | | nbformat JSON |
//! | PUT | `/api/notebook?path=` | nbformat JSON | `{ok}` |
//! | POST | `/api/feedback` | `{cell_id, suggestion_kind, suggested_text, final_text}` | `{provenance, similarity}` |

pub mod config;

use std::collections::HashMap;
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Component, Path, PathBuf};
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::{Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use nbdoc_core::retriever::{load_kb, KbError};
use nbdoc_core::summarizer::{load_model, ModelIoError};
use nbdoc_core::{
    classify_provenance, parse_notebook, serialize_notebook, KnowledgeBase, NotebookError, OutputInfo, OutputKind, Provenance,
    SuggestResponse, Suggester, SuggestionKind,
};
use serde::{Deserialize, Serialize};
use serde_json::json;
use tower_http::trace::TraceLayer;

pub use config::ServiceConfig;

#[derive(Debug, thiserror::Error)]
pub enum StartupError {
    #[error("loading model: {0}")]
    Model(#[from] ModelIoError),
    #[error("loading knowledge base: {0}")]
    Kb(#[from] KbError),
    #[error("notebook root {0} is not a directory")]
    NotebookRoot(PathBuf),
    #[error("cannot bind {addr}: {source}")]
    Bind { addr: String, source: std::io::Error },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub struct AppState {
    pub suggester: Suggester,
    pub notebook_root: PathBuf,
    locks: Mutex<HashMap<PathBuf, Arc<tokio::sync::Mutex<()>>>>,
}

impl AppState {
    pub fn new(suggester: Suggester, notebook_root: PathBuf) -> Self {
        AppState {
            suggester,
            notebook_root,
            locks: Mutex::new(HashMap::new()),
        }
    }

    /// Load the model and knowledge base named by `config`.
    pub fn from_config(config: &ServiceConfig) -> Result<Self, StartupError> {
        let model = config.model_path.as_deref().map(load_model).transpose()?;
        let kb = match &config.kb_path {
            Some(p) => load_kb(p)?,
            None => KnowledgeBase::seed(),
        };
        if !config.notebook_root.is_dir() {
            return Err(StartupError::NotebookRoot(config.notebook_root.clone()));
        }
        Ok(AppState::new(Suggester::new(model, kb), config.notebook_root.clone()))
    }

    fn lock_for(&self, path: &Path) -> Arc<tokio::sync::Mutex<()>> {
        self.locks.lock().unwrap().entry(path.to_path_buf()).or_default().clone()
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    kind: &'static str,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, kind: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            kind,
            message: message.into(),
        }
    }

    fn bad_request(kind: &'static str, message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, kind, message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({"error": self.kind, "message": self.message}))).into_response()
    }
}

impl From<NotebookError> for ApiError {
    fn from(e: NotebookError) -> Self {
        let kind = match e {
            NotebookError::MalformedNotebook(_) => "MalformedNotebook",
            NotebookError::UnsupportedVersion(_) => "UnsupportedVersion",
            NotebookError::UnknownCell(_) => "UnknownCell",
            NotebookError::AnchorNotCode(_) => "AnchorNotCode",
        };
        ApiError::bad_request(kind, e.to_string())
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/api/health", get(health))
        .route("/api/suggest", post(suggest))
        .route("/api/notebook", get(get_notebook).put(put_notebook))
        .route("/api/feedback", post(feedback))
        .layer(TraceLayer::new_for_http())
        .with_state(state)
}

async fn health(State(state): State<Arc<AppState>>) -> Json<serde_json::Value> {
    Json(json!({"status": "ok", "model_loaded": state.suggester.model_loaded()}))
}

#[derive(Debug, Deserialize)]
pub struct SuggestRequest {
    pub source: String,
    #[serde(default)]
    pub has_output: Option<bool>,
    #[serde(default)]
    pub output_kind: Option<String>,
}

impl SuggestRequest {
    /// An explicit kind wins; `has_output: false` means no output; an output
    /// of unstated kind counts as text; nothing at all means never run.
    pub fn output_info(&self) -> Result<OutputInfo, ApiError> {
        match (&self.output_kind, self.has_output) {
            (Some(k), _) => OutputKind::parse(k)
                .map(OutputInfo::Kind)
                .ok_or_else(|| ApiError::bad_request("BadRequest", format!("unknown output_kind {k:?}"))),
            (None, Some(false)) => Ok(OutputInfo::Absent),
            (None, Some(true)) => Ok(OutputInfo::Kind(OutputKind::Text)),
            (None, None) => Ok(OutputInfo::Unknown),
        }
    }
}

fn json_body<T: serde::de::DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request("BadRequest", e.to_string()))
}

async fn suggest(State(state): State<Arc<AppState>>, body: Bytes) -> Result<Json<SuggestResponse>, ApiError> {
    let req: SuggestRequest = json_body(&body)?;
    let info = req.output_info()?;
    let resp = tokio::task::spawn_blocking(move || state.suggester.suggest(&req.source, info))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "Internal", e.to_string()))?;
    if !resp.warnings.is_empty() {
        tracing::warn!(warnings = ?resp.warnings, "suggestion degraded");
    }
    Ok(Json(resp))
}

#[derive(Debug, Deserialize)]
pub struct NotebookQuery {
    pub path: String,
}

/// Resolve a client path under the notebook root, refusing anything that
/// could step outside it.
pub fn resolve_notebook_path(root: &Path, rel: &str) -> Result<PathBuf, ApiError> {
    let p = Path::new(rel);
    let ok = !rel.is_empty() && p.components().all(|c| matches!(c, Component::Normal(_)));
    if !ok {
        return Err(ApiError::bad_request("BadPath", format!("path {rel:?} must be relative and stay inside the notebook root")));
    }
    Ok(root.join(p))
}

async fn get_notebook(State(state): State<Arc<AppState>>, Query(q): Query<NotebookQuery>) -> Result<Response, ApiError> {
    let path = resolve_notebook_path(&state.notebook_root, &q.path)?;
    let lock = state.lock_for(&path);
    let _guard = lock.lock().await;
    let bytes = match tokio::fs::read(&path).await {
        Ok(b) => b,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            return Err(ApiError::new(StatusCode::NOT_FOUND, "NotFound", format!("no notebook at {}", q.path)))
        }
        Err(e) => return Err(ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "Io", e.to_string())),
    };
    let doc = parse_notebook(&bytes).map_err(|e| {
        let mut err = ApiError::from(e);
        err.status = StatusCode::UNPROCESSABLE_ENTITY;
        err
    })?;
    Ok(([(header::CONTENT_TYPE, "application/json")], serialize_notebook(&doc)).into_response())
}

/// Write `bytes` to `path` through a sibling temporary file and a rename.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

async fn put_notebook(State(state): State<Arc<AppState>>, Query(q): Query<NotebookQuery>, body: Bytes) -> Result<Json<serde_json::Value>, ApiError> {
    let path = resolve_notebook_path(&state.notebook_root, &q.path)?;
    let doc = parse_notebook(&body)?;
    let bytes = serialize_notebook(&doc);
    let lock = state.lock_for(&path);
    let _guard = lock.lock().await;
    let target = path.clone();
    tokio::task::spawn_blocking(move || {
        if let Some(dir) = target.parent() {
            std::fs::create_dir_all(dir)?;
        }
        atomic_write(&target, &bytes)
    })
    .await
    .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "Internal", e.to_string()))?
    .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "Io", e.to_string()))?;
    tracing::info!(path = %q.path, cells = doc.cells.len(), "notebook saved");
    Ok(Json(json!({"ok": true})))
}

#[derive(Debug, Deserialize)]
pub struct FeedbackRequest {
    pub cell_id: String,
    pub suggestion_kind: Option<SuggestionKind>,
    pub suggested_text: Option<String>,
    pub final_text: String,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct FeedbackResponse {
    pub provenance: Provenance,
    pub similarity: f64,
}

async fn feedback(body: Bytes) -> Result<Json<FeedbackResponse>, ApiError> {
    let req: FeedbackRequest = json_body(&body)?;
    // A cell written without a suggestion compares against nothing and so
    // scores as human-written.
    let suggested = req.suggested_text.as_deref().unwrap_or("");
    let tag = classify_provenance(suggested, &req.final_text);
    tracing::info!(cell = %req.cell_id, kind = ?req.suggestion_kind, provenance = tag.value.as_str(), "feedback");
    Ok(Json(FeedbackResponse {
        provenance: tag.value,
        similarity: tag.similarity,
    }))
}

/// Bind and serve until ctrl-c.
pub async fn serve(config: ServiceConfig) -> Result<(), StartupError> {
    let state = Arc::new(AppState::from_config(&config)?);
    let addr = format!("{}:{}", config.host, config.port);
    let listener = tokio::net::TcpListener::bind(&addr)
        .await
        .map_err(|source| StartupError::Bind { addr: addr.clone(), source })?;
    let local: SocketAddr = listener.local_addr()?;
    tracing::info!(%local, model_loaded = state.suggester.model_loaded(), kb_entries = state.suggester.kb().len(), "listening");
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
            tracing::info!("shutting down");
        })
        .await?;
    Ok(())
}
