//! HTTP API for interactive pertinence feedback over one loaded collection.
//!
//! | method | path | body | success |
//! |---|---|---|---|
//! | POST | `/sessions` | `{goals}` | 201 `{session_id, results}` |
//! | GET | `/sessions/{id}` | | 200 session state |
//! | POST | `/sessions/{id}/feedback` | `{object_ids}` | 200 session state |
//! | POST | `/sessions/{id}/expand` | `{method, k?}` | 200 `{added, results, iteration}` |
//! | GET | `/collection/stats` | | 200 collection stats |
//!
//! Errors are `{error, detail}` with a 4xx/5xx status.

#![forbid(unsafe_code)]

mod session;

use std::net::SocketAddr;
use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use pertinex_core::{CollectionStats, FeedbackMethod, ScoredObject, DEFAULT_EXPANSION_SIZE};
use serde::{Deserialize, Serialize};

pub use session::{AddedGoal, LogRecord, Session, SessionError, SessionManager};

#[derive(Debug, Clone)]
pub struct AppState {
    sessions: Arc<SessionManager>,
    stats: Arc<CollectionStats>,
}

impl AppState {
    pub fn new(sessions: SessionManager, stats: CollectionStats) -> Self {
        Self {
            sessions: Arc::new(sessions),
            stats: Arc::new(stats),
        }
    }

    pub fn sessions(&self) -> &SessionManager {
        &self.sessions
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    pub detail: String,
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    error: &'static str,
    detail: String,
}

impl ApiError {
    fn bad_request(detail: impl Into<String>) -> Self {
        Self {
            status: StatusCode::BAD_REQUEST,
            error: "invalid_request",
            detail: detail.into(),
        }
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        let (status, error) = match &e {
            SessionError::EmptyQuery | SessionError::NoObjects => {
                (StatusCode::BAD_REQUEST, "invalid_request")
            }
            SessionError::UnseenObject(_) => (StatusCode::BAD_REQUEST, "unseen_object"),
            SessionError::NothingJudged => (StatusCode::CONFLICT, "nothing_judged"),
            SessionError::UnknownSession(_) => (StatusCode::NOT_FOUND, "unknown_session"),
            SessionError::Io { .. } | SessionError::CorruptLog { .. } => {
                tracing::error!(error = %e, "session persistence failed");
                (StatusCode::INTERNAL_SERVER_ERROR, "persistence")
            }
        };
        Self {
            status,
            error,
            detail: e.to_string(),
        }
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        Self::bad_request(e.body_text())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorBody {
            error: self.error.to_string(),
            detail: self.detail,
        };
        (self.status, Json(body)).into_response()
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CreateRequest {
    pub goals: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CreateResponse {
    pub session_id: String,
    pub results: Vec<ScoredObject>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct FeedbackRequest {
    pub object_ids: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ExpandRequest {
    pub method: FeedbackMethod,
    #[serde(default)]
    pub k: Option<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ExpandResponse {
    pub added: Vec<AddedGoal>,
    pub results: Vec<ScoredObject>,
    pub iteration: u64,
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/:id", get(get_session))
        .route("/sessions/:id/feedback", post(mark_pertinent))
        .route("/sessions/:id/expand", post(expand))
        .route("/collection/stats", get(collection_stats))
        .fallback(not_found)
        .with_state(state)
}

pub async fn serve(addr: SocketAddr, state: AppState) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!(addr = %listener.local_addr()?, "listening");
    axum::serve(listener, router(state)).await
}

async fn create_session(
    State(state): State<AppState>,
    body: Result<Json<CreateRequest>, JsonRejection>,
) -> Result<(StatusCode, Json<CreateResponse>), ApiError> {
    let Json(req) = body?;
    let session = state.sessions.create(req.goals)?;
    Ok((
        StatusCode::CREATED,
        Json(CreateResponse {
            results: session.results().to_vec(),
            session_id: session.session_id,
        }),
    ))
}

async fn get_session(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> Result<Json<Session>, ApiError> {
    Ok(Json(state.sessions.get(&id)?))
}

async fn mark_pertinent(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Result<Json<FeedbackRequest>, JsonRejection>,
) -> Result<Json<Session>, ApiError> {
    let Json(req) = body?;
    Ok(Json(state.sessions.mark_pertinent(&id, req.object_ids)?))
}

async fn expand(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Result<Json<ExpandRequest>, JsonRejection>,
) -> Result<Json<ExpandResponse>, ApiError> {
    let Json(req) = body?;
    let k = req.k.unwrap_or(DEFAULT_EXPANSION_SIZE);
    let session = state.sessions.expand(&id, req.method, k)?;
    Ok(Json(ExpandResponse {
        added: session.added_goals(),
        results: session.results().to_vec(),
        iteration: session.iteration,
    }))
}

async fn collection_stats(State(state): State<AppState>) -> Json<CollectionStats> {
    Json(state.stats.as_ref().clone())
}

async fn not_found() -> ApiError {
    ApiError {
        status: StatusCode::NOT_FOUND,
        error: "not_found",
        detail: "no such route".into(),
    }
}
