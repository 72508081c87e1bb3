//! HTTP routes over [`Service`].
//!
//! | method | path | body | reply |
//! |---|---|---|---|
//! | POST | `/sessions` | [`CreateSession`] | 201 [`SessionCreated`] |
//! | GET | `/sessions/{id}/next` | | [`Next`] |
//! | POST | `/sessions/{id}/responses` | [`SubmitResponse`] | [`Ack`] |
//! | GET | `/sessions/{id}/summary` | | [`Summary`] |
//! | GET | `/stimuli/{kind}/...` | | stimulus bitmaps |
//!
//! Errors are `{"error": kind, "message": text}` with status 400, 404, 409,
//! 422 or 500.

use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::{header, HeaderValue, Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Serialize;
use tower_http::cors::{AllowOrigin, CorsLayer};
use tower_http::services::ServeDir;

use crate::error::ServiceError;
use crate::session::{Ack, CreateSession, Next, Service, SessionCreated, SubmitResponse, Summary};

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let status = match &self {
            ServiceError::BadRequest(_) => StatusCode::BAD_REQUEST,
            ServiceError::NotFound(_) => StatusCode::NOT_FOUND,
            ServiceError::Conflict(_) => StatusCode::CONFLICT,
            ServiceError::Invalid(_) => StatusCode::UNPROCESSABLE_ENTITY,
            ServiceError::Io { .. } | ServiceError::Core(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        #[derive(Serialize)]
        struct Body {
            error: &'static str,
            message: String,
        }
        let body = Body {
            error: self.kind(),
            message: self.to_string(),
        };
        (status, Json(body)).into_response()
    }
}

type Reply<T> = Result<T, ServiceError>;

fn body<T>(payload: Result<Json<T>, JsonRejection>) -> Reply<T> {
    payload.map(|Json(v)| v).map_err(|e| ServiceError::BadRequest(e.body_text()))
}

/// Runs blocking service work (locks and fsync) off the async workers.
async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Reply<T> + Send + 'static) -> Reply<T> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ServiceError::io("worker", std::io::Error::other(e.to_string())))?
}

async fn create_session(
    State(svc): State<Arc<Service>>,
    payload: Result<Json<CreateSession>, JsonRejection>,
) -> Reply<(StatusCode, Json<SessionCreated>)> {
    let req = body(payload)?;
    let created = blocking(move || svc.create_session(&req)).await?;
    Ok((StatusCode::CREATED, Json(created)))
}

async fn next(State(svc): State<Arc<Service>>, Path(id): Path<String>) -> Reply<Json<Next>> {
    blocking(move || svc.next(&id)).await.map(Json)
}

async fn record(
    State(svc): State<Arc<Service>>,
    Path(id): Path<String>,
    payload: Result<Json<SubmitResponse>, JsonRejection>,
) -> Reply<Json<Ack>> {
    let submit = body(payload)?;
    blocking(move || svc.record(&id, &submit)).await.map(Json)
}

async fn summary(State(svc): State<Arc<Service>>, Path(id): Path<String>) -> Reply<Json<Summary>> {
    blocking(move || svc.summary(&id)).await.map(Json)
}

/// Browser origins allowed to call the API; empty allows any.
pub fn cors(origins: &[String]) -> Result<CorsLayer, ServiceError> {
    let allow = if origins.is_empty() {
        AllowOrigin::any()
    } else {
        let values = origins
            .iter()
            .map(|o| HeaderValue::from_str(o).map_err(|_| ServiceError::BadRequest(format!("bad origin {o:?}"))))
            .collect::<Result<Vec<_>, _>>()?;
        AllowOrigin::list(values)
    };
    Ok(CorsLayer::new()
        .allow_origin(allow)
        .allow_methods([Method::GET, Method::POST])
        .allow_headers([header::CONTENT_TYPE]))
}

/// Routes with stimulus directories mounted read-only. Manifests and logs
/// are never reachable.
pub fn router(svc: Arc<Service>, cors: CorsLayer) -> Router {
    let mut app = Router::new()
        .route("/health", get(|| async { "ok" }))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}/next", get(next))
        .route("/sessions/{id}/responses", post(record))
        .route("/sessions/{id}/summary", get(summary));
    for (kind, dir) in svc.stimulus_dirs() {
        let path = svc.root().join(kind.name()).join(&dir);
        app = app.nest_service(&format!("/stimuli/{}/{dir}", kind.name()), ServeDir::new(path));
    }
    app.layer(cors).with_state(svc)
}
