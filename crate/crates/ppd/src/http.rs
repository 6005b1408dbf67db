//! JSON-over-HTTP adapter for [`ScreeningService`].
//!
//! | method | path                      | body              | success                  |
//! |--------|---------------------------|-------------------|--------------------------|
//! | GET    | `/health`                 |                   | 200 `{status, model_loaded}` |
//! | POST   | `/sessions`               |                   | 201 `{session_id, messages}` |
//! | GET    | `/sessions/{id}`          |                   | 200 `{session_id, state, transcript}` |
//! | POST   | `/sessions/{id}/messages` | `{text}`          | 200 `{messages}`         |
//! | POST   | `/sessions/{id}/feedback` | `{label}`         | 204                      |
//!
//! Errors are `{"error": "..."}` with 404 for an unknown session, 409 for a
//! finished one, 503 when no checkpoint is loaded and 403 when feedback is
//! disabled.

use std::sync::Arc;

use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use ppd_core::dialogue::DialogueError;
use serde::{Deserialize, Serialize};

use crate::service::{ApiMessage, ScreeningService, ServiceError};

#[derive(Debug, Deserialize)]
pub struct PostMessage {
    pub text: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Messages {
    pub messages: Vec<ApiMessage>,
}

#[derive(Debug, Deserialize)]
pub struct Feedback {
    pub label: bool,
}

impl ServiceError {
    pub fn status(&self) -> StatusCode {
        match self {
            ServiceError::NoCheckpoint => StatusCode::SERVICE_UNAVAILABLE,
            ServiceError::UnknownSession(_) => StatusCode::NOT_FOUND,
            ServiceError::SessionDone | ServiceError::NotAssessed => StatusCode::CONFLICT,
            ServiceError::Dialogue(DialogueError::WrongState { .. }) => StatusCode::CONFLICT,
            ServiceError::FeedbackDisabled => StatusCode::FORBIDDEN,
            ServiceError::Dialogue(_) => StatusCode::UNPROCESSABLE_ENTITY,
        }
    }
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let body = serde_json::json!({ "error": self.to_string() });
        (self.status(), Json(body)).into_response()
    }
}

type Shared = Arc<ScreeningService>;

/// Runs a service call off the async workers; backends may block.
async fn blocking<T: Send + 'static>(
    svc: Shared,
    f: impl FnOnce(&ScreeningService) -> Result<T, ServiceError> + Send + 'static,
) -> Result<T, Response> {
    match tokio::task::spawn_blocking(move || f(&svc)).await {
        Ok(r) => r.map_err(IntoResponse::into_response),
        Err(e) => Err((StatusCode::INTERNAL_SERVER_ERROR, Json(serde_json::json!({ "error": e.to_string() }))).into_response()),
    }
}

async fn health(State(svc): State<Shared>) -> Json<serde_json::Value> {
    Json(serde_json::json!({ "status": "ok", "model_loaded": svc.has_model() }))
}

async fn create(State(svc): State<Shared>) -> Response {
    match blocking(svc, |s| s.create_session()).await {
        Ok(c) => (StatusCode::CREATED, Json(c)).into_response(),
        Err(r) => r,
    }
}

async fn view(State(svc): State<Shared>, Path(id): Path<String>) -> Response {
    match blocking(svc, move |s| s.session(&id)).await {
        Ok(v) => Json(v).into_response(),
        Err(r) => r,
    }
}

async fn message(State(svc): State<Shared>, Path(id): Path<String>, Json(body): Json<PostMessage>) -> Response {
    match blocking(svc, move |s| s.post_message(&id, &body.text)).await {
        Ok(messages) => Json(Messages { messages }).into_response(),
        Err(r) => r,
    }
}

async fn feedback(State(svc): State<Shared>, Path(id): Path<String>, Json(body): Json<Feedback>) -> Response {
    match blocking(svc, move |s| s.feedback(&id, body.label)).await {
        Ok(()) => StatusCode::NO_CONTENT.into_response(),
        Err(r) => r,
    }
}

pub fn router(service: Shared) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/sessions", post(create))
        .route("/sessions/{id}", get(view))
        .route("/sessions/{id}/messages", post(message))
        .route("/sessions/{id}/feedback", post(feedback))
        .with_state(service)
}

pub async fn serve(service: Shared, port: u16) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(("0.0.0.0", port)).await?;
    axum::serve(listener, router(service)).await
}
