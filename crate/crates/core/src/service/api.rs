use std::net::SocketAddr;
use std::sync::Arc;

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{FromRequest, FromRequestParts, Path, Query, Request, State};
use axum::http::request::Parts;
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::json;

use super::{AltRef, ServiceError, SessionStore, DEFAULT_TOP_K};
use crate::pcm::Format;

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let body = json!({
            "code": self.code,
            "message": self.message,
            "detail": self.detail,
        });
        (self.status, Json(body)).into_response()
    }
}

/// `Json` whose rejections use the service's error shape.
struct Body<T>(T);

impl<S, T> FromRequest<S> for Body<T>
where
    T: DeserializeOwned,
    S: Send + Sync,
{
    type Rejection = ServiceError;

    async fn from_request(req: Request, state: &S) -> Result<Self, Self::Rejection> {
        Json::<T>::from_request(req, state)
            .await
            .map(|Json(v)| Body(v))
            .map_err(|e: JsonRejection| {
                ServiceError::new(StatusCode::BAD_REQUEST, "bad_request", e.body_text())
            })
    }
}

struct Params<T>(T);

impl<S, T> FromRequestParts<S> for Params<T>
where
    T: DeserializeOwned,
    S: Send + Sync,
{
    type Rejection = ServiceError;

    async fn from_request_parts(parts: &mut Parts, state: &S) -> Result<Self, Self::Rejection> {
        Query::<T>::from_request_parts(parts, state)
            .await
            .map(|Query(v)| Params(v))
            .map_err(|e: QueryRejection| {
                ServiceError::new(StatusCode::BAD_REQUEST, "bad_request", e.body_text())
            })
    }
}

type Shared = Arc<SessionStore>;

#[derive(Deserialize)]
struct CreateBody {
    labels: Vec<String>,
    gamma: Option<f64>,
    entries: Option<Vec<Vec<Option<f64>>>>,
}

#[derive(Deserialize)]
struct EntryBody {
    a: AltRef,
    b: AltRef,
    value: f64,
}

#[derive(Deserialize)]
struct ReportQuery {
    k: Option<usize>,
    gamma: Option<f64>,
}

#[derive(Deserialize)]
struct ExportQuery {
    format: Option<String>,
}

async fn create(State(store): State<Shared>, Body(body): Body<CreateBody>) -> Response {
    match store.create(body.labels, body.gamma, body.entries) {
        Ok(id) => {
            let view = store.get(&id).expect("just created");
            (StatusCode::CREATED, Json(view)).into_response()
        }
        Err(e) => e.into_response(),
    }
}

async fn show(State(store): State<Shared>, Path(id): Path<String>) -> Response {
    let id = match SessionStore::parse_id(&id) {
        Ok(id) => id,
        Err(e) => return e.into_response(),
    };
    store.get(&id).map(Json).into_response()
}

async fn set_entry(
    State(store): State<Shared>,
    Path(id): Path<String>,
    Body(body): Body<EntryBody>,
) -> Response {
    SessionStore::parse_id(&id)
        .and_then(|id| store.set_entry(&id, &body.a, &body.b, body.value))
        .map(Json)
        .into_response()
}

async fn report(
    State(store): State<Shared>,
    Path(id): Path<String>,
    Params(q): Params<ReportQuery>,
) -> Response {
    SessionStore::parse_id(&id)
        .and_then(|id| store.report(&id, q.gamma, q.k.unwrap_or(DEFAULT_TOP_K)))
        .map(Json)
        .into_response()
}

async fn export(
    State(store): State<Shared>,
    Path(id): Path<String>,
    Params(q): Params<ExportQuery>,
) -> Response {
    let format = match q.format.as_deref().unwrap_or("json").parse::<Format>() {
        Ok(f) => f,
        Err(e) => {
            return ServiceError::new(StatusCode::BAD_REQUEST, "bad_request", e.to_string())
                .into_response()
        }
    };
    let content_type = match format {
        Format::Csv => "text/csv",
        Format::Json => "application/json",
    };
    SessionStore::parse_id(&id)
        .and_then(|id| store.export(&id, format))
        .map(|body| ([(header::CONTENT_TYPE, content_type)], body))
        .into_response()
}

async fn delete(State(store): State<Shared>, Path(id): Path<String>) -> Response {
    SessionStore::parse_id(&id)
        .and_then(|id| store.delete(&id))
        .map(|_| StatusCode::NO_CONTENT)
        .into_response()
}

async fn fallback() -> ServiceError {
    ServiceError::new(StatusCode::NOT_FOUND, "not_found", "no such route")
}

pub fn router(store: Arc<SessionStore>) -> Router {
    Router::new()
        .route("/sessions", post(create))
        .route("/sessions/{id}", get(show).delete(delete))
        .route("/sessions/{id}/entries", put(set_entry))
        .route("/sessions/{id}/report", get(report))
        .route("/sessions/{id}/export", get(export))
        .fallback(fallback)
        .with_state(store)
}

/// Serves the API until Ctrl-C.
pub async fn serve(addr: SocketAddr, store: Arc<SessionStore>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(store))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
