use std::sync::Arc;
use std::time::Duration;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;

use tradeoff_core::search::{StrategyConfig, StrategyKind};

use crate::session::{HistoryEntry, Mode, SessionError, SessionManager, Snapshot};

/// Error response: `{"error": {"code": ..., "message": ...}}`.
#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            code,
            message: message.into(),
        }
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        let (status, code) = match &e {
            SessionError::UnknownSession(_) => (StatusCode::NOT_FOUND, "unknown_session"),
            SessionError::UnknownLandscape(_) => (StatusCode::NOT_FOUND, "unknown_landscape"),
            SessionError::Stopped(_) => (StatusCode::CONFLICT, "session_stopped"),
            SessionError::SearchFinished(_) => (StatusCode::CONFLICT, "search_finished"),
            SessionError::MissingLambda => (StatusCode::UNPROCESSABLE_ENTITY, "missing_lambda"),
            SessionError::UnexpectedLambda => (StatusCode::UNPROCESSABLE_ENTITY, "unexpected_lambda"),
            SessionError::LambdaOutOfRange(_) => (StatusCode::UNPROCESSABLE_ENTITY, "lambda_out_of_range"),
            SessionError::Search(_) => (StatusCode::UNPROCESSABLE_ENTITY, "invalid_search"),
        };
        ApiError::new(status, code, e.to_string())
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, "bad_request", e.body_text())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({ "error": { "code": self.code, "message": self.message } });
        (self.status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

/// A strategy given either by kind (default hyperparameters) or in full.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum StrategySpec {
    Kind(StrategyKind),
    Config(StrategyConfig),
}

impl StrategySpec {
    fn config(self) -> StrategyConfig {
        match self {
            StrategySpec::Kind(k) => StrategyConfig::default_for(k),
            StrategySpec::Config(c) => c,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateRequest {
    pub landscape: String,
    pub strategy: StrategySpec,
    pub budget: usize,
    #[serde(default)]
    pub seed: u64,
    /// When set, the server ticks the session on this period.
    #[serde(default)]
    pub tick_period_ms: Option<u64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeRequest {
    pub mode: Mode,
    #[serde(default)]
    pub lambda: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TickResponse {
    pub entry: HistoryEntry,
    pub mode: Mode,
    pub budget_used: usize,
    pub finished: bool,
    pub recommendation: Option<f64>,
}

#[derive(Clone, Copy, Debug, Deserialize)]
pub struct SinceQuery {
    #[serde(default)]
    pub since: usize,
}

/// Routes of the session API.
pub fn router(manager: Arc<SessionManager>) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/tick", post(tick_session))
        .route("/sessions/{id}/mode", post(set_mode))
        .route("/landscapes", get(list_landscapes))
        .route("/landscapes/{id}/sweep", get(get_sweep))
        .fallback(|| async { ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such route") })
        .with_state(manager)
}

async fn create_session(
    State(manager): State<Arc<SessionManager>>,
    body: Result<Json<CreateRequest>, JsonRejection>,
) -> Result<(StatusCode, Json<Snapshot>), ApiError> {
    let Json(request) = body?;
    if request.tick_period_ms == Some(0) {
        return Err(ApiError::new(
            StatusCode::UNPROCESSABLE_ENTITY,
            "bad_tick_period",
            "tick_period_ms must be positive",
        ));
    }
    let id = manager.create(&request.landscape, request.strategy.config(), request.budget, request.seed)?;
    if let Some(period) = request.tick_period_ms {
        spawn_timer(Arc::clone(&manager), id, Duration::from_millis(period));
    }
    Ok((StatusCode::CREATED, Json(manager.snapshot(id, 0)?)))
}

/// Ticks the session every `period` until it stops.
fn spawn_timer(manager: Arc<SessionManager>, id: u64, period: Duration) {
    tokio::spawn(async move {
        let mut interval = tokio::time::interval(period);
        interval.tick().await;
        loop {
            interval.tick().await;
            match manager.tick(id) {
                Ok(_) => {}
                Err(SessionError::MissingLambda) => {}
                Err(_) => break,
            }
        }
    });
}

async fn get_session(
    State(manager): State<Arc<SessionManager>>,
    Path(id): Path<u64>,
    Query(query): Query<SinceQuery>,
) -> ApiResult<Snapshot> {
    Ok(Json(manager.snapshot(id, query.since)?))
}

async fn tick_session(State(manager): State<Arc<SessionManager>>, Path(id): Path<u64>) -> ApiResult<TickResponse> {
    let response = manager.with(id, |s| {
        let entry = s.tick()?;
        let state = s.state();
        Ok::<_, SessionError>(TickResponse {
            entry,
            mode: s.mode(),
            budget_used: state.budget_used(),
            finished: state.finished(),
            recommendation: state.recommend().ok().map(|l| l.value()),
        })
    })??;
    Ok(Json(response))
}

async fn set_mode(
    State(manager): State<Arc<SessionManager>>,
    Path(id): Path<u64>,
    body: Result<Json<ModeRequest>, JsonRejection>,
) -> ApiResult<Snapshot> {
    let Json(request) = body?;
    Ok(Json(manager.set_mode(id, request.mode, request.lambda)?))
}

async fn list_landscapes(State(manager): State<Arc<SessionManager>>) -> Json<serde_json::Value> {
    Json(json!({ "landscapes": manager.registry().list() }))
}

async fn get_sweep(
    State(manager): State<Arc<SessionManager>>,
    Path(id): Path<String>,
) -> ApiResult<tradeoff_core::harness::SweepCurve> {
    manager
        .registry()
        .sweep(&id)
        .cloned()
        .map(Json)
        .ok_or_else(|| SessionError::UnknownLandscape(id).into())
}

/// Serves the API on `addr` until the process ends.
pub async fn serve(manager: Arc<SessionManager>, addr: std::net::SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(manager)).await
}
