//! HTTP front end: read-only views of the sensitivity database and trace
//! library, plus what-if scoring. State is loaded once and shared immutably.

use std::path::Path;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Serialize;
use serde_json::{json, Value};

use digitwise::engagement_model::UnifiedModel;
use digitwise::pipeline::{read_json, FeatureCatalog};
use digitwise::twin_registry::SensitivityDb;
use digitwise::whatif::{run_whatif, TraceLibrary, WhatIfScenario};
use digitwise::Error;

pub const ERROR_SCHEMA: &str = "digitwise.error/1";
/// Default ceiling on simulated sessions (n_sessions × cohort size) per scenario.
pub const DEFAULT_SESSION_CAP: usize = 20_000;

pub struct AppState {
    pub model: UnifiedModel,
    pub db: SensitivityDb,
    pub traces: TraceLibrary,
    pub catalog: Option<FeatureCatalog>,
    pub session_cap: usize,
}

impl AppState {
    /// Loads artifacts from disk. Traces in `trace_dir` are added to the
    /// bundled library.
    pub fn load(
        model: &Path,
        sensitivities: &Path,
        catalog: Option<&Path>,
        trace_dir: Option<&Path>,
        session_cap: usize,
    ) -> digitwise::Result<Self> {
        let model = UnifiedModel::load(model)?;
        let db = SensitivityDb::load(sensitivities, Some(&model.features))?;
        let mut traces = TraceLibrary::bundled();
        if let Some(dir) = trace_dir {
            traces.load_dir(dir)?;
        }
        let catalog = catalog.map(read_json).transpose()?;
        Ok(Self { model, db, traces, catalog, session_cap })
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/users", get(users))
        .route("/users/{id}/sensitivities", get(sensitivities))
        .route("/traces", get(traces))
        .route("/features", get(features))
        .route("/whatif", post(whatif))
        .with_state(state)
}

pub async fn serve(state: AppState, addr: &str) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(Arc::new(state)))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
    field: Option<String>,
}

impl ApiError {
    fn bad_request(message: impl Into<String>, field: Option<String>) -> Self {
        Self { status: StatusCode::BAD_REQUEST, message: message.into(), field }
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::UnknownUsers(_) | Error::UnknownTrace(_) => StatusCode::NOT_FOUND,
            Error::Invalid(_) | Error::Config(_) | Error::Schema(_) => StatusCode::BAD_REQUEST,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        let field = match &e {
            Error::UnknownUsers(_) => Some("cohort".to_string()),
            Error::UnknownTrace(_) => Some("trace".to_string()),
            Error::Invalid(m) => field_of(m),
            _ => None,
        };
        Self { status, message: e.to_string(), field }
    }
}

/// Pulls `x` out of a "field `x`: ..." message.
fn field_of(message: &str) -> Option<String> {
    let rest = message.split("field `").nth(1)?;
    Some(rest.split('`').next()?.to_string())
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({ "schema": ERROR_SCHEMA, "status": self.status.as_u16(), "error": self.message, "field": self.field });
        (self.status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

async fn health() -> Json<Value> {
    Json(json!({ "schema": "digitwise.health/1", "status": "ok" }))
}

#[derive(Serialize)]
struct UserSummary<'a> {
    user_id: &'a str,
    degenerate: bool,
}

async fn users(State(s): State<Arc<AppState>>) -> Json<Value> {
    let users: Vec<UserSummary> = s.db.vectors.values().map(|v| UserSummary { user_id: &v.user_id, degenerate: v.degenerate }).collect();
    Json(json!({ "schema": "digitwise.users/1", "users": users }))
}

async fn sensitivities(State(s): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> ApiResult<Value> {
    let v = s.db.get(&id).ok_or_else(|| ApiError::from(Error::UnknownUsers(vec![id.clone()])))?;
    Ok(Json(json!({
        "schema": "digitwise.sensitivities/1",
        "user_id": v.user_id,
        "degenerate": v.degenerate,
        "weights": v.weights,
    })))
}

async fn traces(State(s): State<Arc<AppState>>) -> Json<Value> {
    let traces: Vec<Value> = s
        .traces
        .iter()
        .map(|t| {
            let period = t.period();
            let mean = t.steps.iter().map(|st| st.duration_s * st.bandwidth_kbps).sum::<f64>() / period;
            json!({ "name": t.name, "period_s": period, "mean_bandwidth_kbps": mean, "steps": t.steps.len() })
        })
        .collect();
    Json(json!({ "schema": "digitwise.traces/1", "traces": traces }))
}

async fn features(State(s): State<Arc<AppState>>) -> Json<Value> {
    Json(json!({
        "schema": "digitwise.features/1",
        "selected": s.model.features,
        "catalog": s.catalog,
    }))
}

/// Accepts either a bare scenario list or `{"scenarios": [...]}`.
fn parse_scenarios(body: &[u8]) -> Result<Vec<WhatIfScenario>, ApiError> {
    let value: Value = serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("malformed JSON: {e}"), None))?;
    let (list, prefix) = match value {
        Value::Object(mut m) if m.contains_key("scenarios") => (m.remove("scenarios").unwrap(), "scenarios"),
        v => (v, ""),
    };
    serde_path_to_error::deserialize::<_, Vec<WhatIfScenario>>(list).map_err(|e| {
        let path = e.path().to_string();
        let field = format!("{prefix}{path}").trim_start_matches('.').to_string();
        ApiError::bad_request(e.into_inner().to_string(), (field != "?" && !field.is_empty()).then_some(field))
    })
}

async fn whatif(State(s): State<Arc<AppState>>, body: Bytes) -> Result<Response, ApiError> {
    let scenarios = parse_scenarios(&body)?;
    if scenarios.is_empty() {
        return Err(ApiError::bad_request("at least one scenario is required", None));
    }
    for (i, sc) in scenarios.iter().enumerate() {
        sc.validate().map_err(|e| {
            let mut err = ApiError::from(e);
            err.field = err.field.map(|f| format!("[{i}].{f}"));
            err
        })?;
        if sc.session_count() > s.session_cap {
            return Err(ApiError {
                status: StatusCode::UNPROCESSABLE_ENTITY,
                message: format!("scenario {i} asks for {} sessions; the cap is {}", sc.session_count(), s.session_cap),
                field: Some(format!("[{i}].n_sessions")),
            });
        }
    }
    let state = Arc::clone(&s);
    let result = tokio::task::spawn_blocking(move || run_whatif(&scenarios, &state.model, &state.db, &state.traces))
        .await
        .map_err(|e| ApiError { status: StatusCode::INTERNAL_SERVER_ERROR, message: e.to_string(), field: None })??;
    Ok(Json(result).into_response())
}
