//! HTTP/JSON routes.

use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::ExperimentConfig;
use crate::engine::{AnswerOutcome, NextTrial};
use crate::error::ServiceError;
use crate::store::{lock, Experiment, Registry};

pub const IDEMPOTENCY_HEADER: &str = "idempotency-key";

#[derive(Clone)]
pub struct AppState {
    pub registry: Arc<Registry>,
    pub admin_token: Option<String>,
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/experiments", post(create_experiment))
        .route("/experiments/{id}/participants", post(register_participant))
        .route("/experiments/{id}/participants/{pid}/next", get(next_trial))
        .route("/trials/{token}/answer", post(submit_answer))
        .route("/experiments/{id}/report", get(report))
        .route("/experiments/{id}/calibration", get(calibration))
        .with_state(state)
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let status = match &self {
            ServiceError::Validation { .. } => StatusCode::UNPROCESSABLE_ENTITY,
            ServiceError::NotFound(_) => StatusCode::NOT_FOUND,
            ServiceError::Conflict(_) => StatusCode::CONFLICT,
            ServiceError::Unauthorized => StatusCode::UNAUTHORIZED,
            ServiceError::Engine(bayesadapt::Error::InvalidArgument(_)) => StatusCode::BAD_REQUEST,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        let mut body = json!({"code": self.code(), "message": self.to_string()});
        if let Some(f) = self.field() {
            body["field"] = json!(f);
        }
        (status, Json(body)).into_response()
    }
}

fn body<T>(payload: Result<Json<T>, JsonRejection>) -> Result<T, ServiceError> {
    payload
        .map(|Json(v)| v)
        .map_err(|e| ServiceError::validation("body", e.body_text()))
}

fn check_bearer(headers: &HeaderMap, expected: Option<&str>) -> Result<(), ServiceError> {
    let Some(expected) = expected else {
        return Ok(());
    };
    let given = headers
        .get(header::AUTHORIZATION)
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.strip_prefix("Bearer "));
    if given == Some(expected) {
        Ok(())
    } else {
        Err(ServiceError::Unauthorized)
    }
}

/// Run `f` on the locked experiment off the async runtime, after checking
/// the experiment's bearer token.
async fn with_experiment<T, F>(state: &AppState, id: String, headers: HeaderMap, f: F) -> Result<T, ServiceError>
where
    T: Send + 'static,
    F: FnOnce(&mut Experiment) -> Result<T, ServiceError> + Send + 'static,
{
    let handle = state.registry.get(&id)?;
    tokio::task::spawn_blocking(move || {
        let mut exp = lock(&handle);
        check_bearer(&headers, exp.session().config().bearer_token.as_deref())?;
        f(&mut exp)
    })
    .await
    .map_err(|e| ServiceError::Io(std::io::Error::other(e)))?
}

async fn health() -> Json<serde_json::Value> {
    Json(json!({"status": "ok"}))
}

#[derive(Serialize)]
struct Created {
    experiment_id: String,
}

async fn create_experiment(
    State(state): State<AppState>,
    headers: HeaderMap,
    payload: Result<Json<ExperimentConfig>, JsonRejection>,
) -> Result<(StatusCode, Json<Created>), ServiceError> {
    check_bearer(&headers, state.admin_token.as_deref())?;
    let config = body(payload)?;
    let key = headers
        .get(IDEMPOTENCY_HEADER)
        .and_then(|v| v.to_str().ok())
        .map(str::to_owned);
    let registry = state.registry.clone();
    let (experiment_id, created) = tokio::task::spawn_blocking(move || registry.create(config, key))
        .await
        .map_err(|e| ServiceError::Io(std::io::Error::other(e)))??;
    let status = if created { StatusCode::CREATED } else { StatusCode::OK };
    Ok((status, Json(Created { experiment_id })))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Registration {
    participant_id: String,
    #[serde(default)]
    group: Option<u8>,
}

async fn register_participant(
    State(state): State<AppState>,
    Path(id): Path<String>,
    headers: HeaderMap,
    payload: Result<Json<Registration>, JsonRejection>,
) -> Result<(StatusCode, Json<serde_json::Value>), ServiceError> {
    let reg = body(payload)?;
    with_experiment(&state, id, headers, move |exp| {
        let step = exp.session().register(&reg.participant_id, reg.group)?;
        let status = if exp.run(step)?.is_some() { StatusCode::OK } else { StatusCode::CREATED };
        Ok((
            status,
            Json(json!({"participant_id": reg.participant_id, "group": reg.group})),
        ))
    })
    .await
}

async fn next_trial(
    State(state): State<AppState>,
    Path((id, pid)): Path<(String, String)>,
    headers: HeaderMap,
) -> Result<Json<NextTrial>, ServiceError> {
    with_experiment(&state, id, headers, move |exp| {
        let step = exp.session().next_trial(&pid)?;
        match exp.run(step)? {
            Some(next) => Ok(Json(next)),
            None => Ok(Json(exp.session().current_trial(&pid)?)),
        }
    })
    .await
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Answer {
    answer: String,
    #[serde(default)]
    duration_s: Option<f64>,
}

async fn submit_answer(
    State(state): State<AppState>,
    Path(token): Path<String>,
    headers: HeaderMap,
    payload: Result<Json<Answer>, JsonRejection>,
) -> Result<Json<AnswerOutcome>, ServiceError> {
    let answer = body(payload)?;
    let Some((id, _)) = token.split_once('.') else {
        return Err(ServiceError::Conflict("unknown or already used trial token".into()));
    };
    let id = id.to_owned();
    if state.registry.get(&id).is_err() {
        return Err(ServiceError::Conflict("unknown or already used trial token".into()));
    }
    with_experiment(&state, id, headers, move |exp| {
        let event = exp.session().submit_answer(&token, &answer.answer, answer.duration_s)?;
        exp.commit(&event)?;
        Ok(Json(exp.session().answer_outcome(&event).expect("answer event")))
    })
    .await
}

async fn report(
    State(state): State<AppState>,
    Path(id): Path<String>,
    headers: HeaderMap,
) -> Result<Json<crate::engine::Report>, ServiceError> {
    with_experiment(&state, id, headers, |exp| Ok(Json(exp.session().report()?))).await
}

async fn calibration(
    State(state): State<AppState>,
    Path(id): Path<String>,
    headers: HeaderMap,
) -> Result<Response, ServiceError> {
    let csv = with_experiment(&state, id, headers, |exp| exp.session().calibration_csv()).await?;
    Ok(([(header::CONTENT_TYPE, "text/csv")], csv).into_response())
}
