use std::sync::{Arc, Mutex, MutexGuard};

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};

use chiller_ddo::simplant::OperatorSchedule;

use crate::service::{savings_report, ServiceError, ServiceState};

pub type Shared = Arc<Mutex<ServiceState>>;

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let status = match &self {
            ServiceError::BadRequest(_) => StatusCode::BAD_REQUEST,
            ServiceError::Conflict(_) => StatusCode::CONFLICT,
            ServiceError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        (status, Json(ErrorBody { error: self.to_string() })).into_response()
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
}

impl From<JsonRejection> for ServiceError {
    fn from(r: JsonRejection) -> Self {
        ServiceError::BadRequest(r.body_text())
    }
}

impl From<QueryRejection> for ServiceError {
    fn from(r: QueryRejection) -> Self {
        ServiceError::BadRequest(r.body_text())
    }
}

fn lock(state: &Shared) -> Result<MutexGuard<'_, ServiceState>, ServiceError> {
    state.lock().map_err(|_| ServiceError::Internal("service state poisoned by an earlier panic".into()))
}

pub fn router(state: Shared) -> Router {
    Router::new()
        .route("/telemetry/latest", get(latest))
        .route("/telemetry/range", get(range))
        .route("/status", get(status))
        .route("/savings", get(savings))
        .route("/schedule", post(schedule))
        .route("/setpoint", post(setpoint))
        .route("/enrichment/window", post(enrichment_window))
        .route("/ddo", post(ddo))
        .with_state(state)
}

async fn latest(State(s): State<Shared>) -> Result<Response, ServiceError> {
    let st = lock(&s)?;
    Ok(match st.latest() {
        Some(r) => Json(r).into_response(),
        None => (StatusCode::SERVICE_UNAVAILABLE, Json(ErrorBody { error: "no telemetry yet".into() })).into_response(),
    })
}

#[derive(Debug, Deserialize)]
struct RangeQuery {
    from: u64,
    to: u64,
}

async fn range(State(s): State<Shared>, q: Result<Query<RangeQuery>, QueryRejection>) -> Result<Response, ServiceError> {
    let Query(q) = q?;
    if q.from > q.to {
        return Err(ServiceError::BadRequest(format!("from {} is after to {}", q.from, q.to)));
    }
    let st = lock(&s)?;
    Ok(Json(st.range(q.from, q.to)).into_response())
}

async fn status(State(s): State<Shared>) -> Result<Response, ServiceError> {
    Ok(Json(lock(&s)?.status()).into_response())
}

async fn savings(State(s): State<Shared>) -> Result<Response, ServiceError> {
    let (base, opt) = lock(&s)?.savings_split();
    let report = tokio::task::spawn_blocking(move || savings_report(&base, &opt))
        .await
        .map_err(|e| ServiceError::Internal(e.to_string()))??;
    Ok(Json(report).into_response())
}

async fn schedule(State(s): State<Shared>, body: Result<Json<OperatorSchedule>, JsonRejection>) -> Result<Response, ServiceError> {
    let Json(body) = body?;
    let mut st = lock(&s)?;
    st.set_schedule(body)?;
    Ok(Json(st.status().schedule).into_response())
}

#[derive(Debug, Deserialize)]
struct Setpoint {
    chsp: f64,
}

async fn setpoint(State(s): State<Shared>, body: Result<Json<Setpoint>, JsonRejection>) -> Result<Response, ServiceError> {
    let Json(body) = body?;
    lock(&s)?.set_chsp(body.chsp)?;
    Ok(Json(serde_json::json!({ "chsp": body.chsp })).into_response())
}

#[derive(Debug, Deserialize)]
struct WindowRequest {
    duration_min: Option<u64>,
}

async fn enrichment_window(State(s): State<Shared>, body: Result<Json<WindowRequest>, JsonRejection>) -> Result<Response, ServiceError> {
    let Json(body) = body?;
    let w = lock(&s)?.add_enrichment_window(body.duration_min)?;
    Ok((StatusCode::CREATED, Json(w)).into_response())
}

#[derive(Debug, Deserialize)]
struct DdoToggle {
    enabled: bool,
}

async fn ddo(State(s): State<Shared>, body: Result<Json<DdoToggle>, JsonRejection>) -> Result<Response, ServiceError> {
    let Json(body) = body?;
    lock(&s)?.set_ddo(body.enabled)?;
    Ok(Json(serde_json::json!({ "enabled": body.enabled })).into_response())
}
