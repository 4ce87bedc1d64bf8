//! HTTP API over [`SessionStore`].
//!
//! | method | path                           | body                          |
//! |--------|--------------------------------|-------------------------------|
//! | POST   | `/sessions`                    | CSV text                      |
//! | GET    | `/sessions/{id}`               |                               |
//! | DELETE | `/sessions/{id}`               |                               |
//! | GET    | `/sessions/{id}/scene`         |                               |
//! | GET    | `/sessions/{id}/stats`         |                               |
//! | PUT    | `/sessions/{id}/model`         | `{revision, model}`           |
//! | PUT    | `/sessions/{id}/rules/{index}` | `{revision, rule}`            |
//! | DELETE | `/sessions/{id}/rules/{index}` | `{revision}`                  |
//! | PUT    | `/sessions/{id}/view`          | `{revision, view}`            |
//!
//! Responses are canonical JSON except the scene, whose body is the
//! canonical scene file; its revision travels in the `x-glc3d-revision`
//! header.

use std::collections::BTreeMap;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, put};
use axum::Router;
use glc3d_core::formats::RuleDocument;
use glc3d_core::{canonical, scene, Error, RuleStats, ViewKind};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::session::{load_dataset, FieldError, ModelRequest, SessionError, SessionStore};

pub const REVISION_HEADER: &str = "x-glc3d-revision";

/// Default bind address; override with the `GLC3D_ADDR` environment variable.
pub const DEFAULT_ADDR: &str = "127.0.0.1:7878";
pub const ADDR_ENV: &str = "GLC3D_ADDR";

pub fn router(store: Arc<SessionStore>) -> Router {
    Router::new()
        .route("/health", get(|| async { "ok\n" }))
        .route("/sessions", axum::routing::post(create_session))
        .route("/sessions/{id}", get(session_summary).delete(delete_session))
        .route("/sessions/{id}/scene", get(get_scene))
        .route("/sessions/{id}/stats", get(get_stats))
        .route("/sessions/{id}/model", put(put_model))
        .route("/sessions/{id}/rules/{index}", put(put_rule).delete(delete_rule))
        .route("/sessions/{id}/view", put(put_view))
        .with_state(store)
}

pub struct ApiError(SessionError);

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        Self(e)
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        Self(SessionError::Core(e))
    }
}

#[derive(Serialize)]
struct ErrorBody {
    error: &'static str,
    message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    current_revision: Option<u64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    fields: Vec<FieldError>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    valid: Vec<String>,
}

impl ErrorBody {
    fn new(error: &'static str, message: String) -> Self {
        Self { error, message, current_revision: None, fields: Vec::new(), valid: Vec::new() }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let message = self.0.to_string();
        let (status, body) = match self.0 {
            SessionError::NotFound(_) => (StatusCode::NOT_FOUND, ErrorBody::new("not-found", message)),
            SessionError::Conflict { current, .. } => (
                StatusCode::CONFLICT,
                ErrorBody { current_revision: Some(current), ..ErrorBody::new("conflict", message) },
            ),
            SessionError::Invalid(fields) => (
                StatusCode::UNPROCESSABLE_ENTITY,
                ErrorBody { fields, ..ErrorBody::new("validation", message) },
            ),
            SessionError::Core(e) => match e {
                Error::Parse { .. } => (StatusCode::BAD_REQUEST, ErrorBody::new("parse", message)),
                Error::Lookup { valid, .. } => (
                    StatusCode::UNPROCESSABLE_ENTITY,
                    ErrorBody { valid, ..ErrorBody::new("lookup", message) },
                ),
                Error::Config(_) => (StatusCode::UNPROCESSABLE_ENTITY, ErrorBody::new("configuration", message)),
                Error::Validation(_) | Error::Contract(_) => (
                    StatusCode::UNPROCESSABLE_ENTITY,
                    ErrorBody {
                        fields: vec![FieldError { field: "body".into(), message: message.clone() }],
                        ..ErrorBody::new("validation", message)
                    },
                ),
                Error::Io(_) => (StatusCode::INTERNAL_SERVER_ERROR, ErrorBody::new("internal", message)),
            },
            SessionError::Snapshot { .. } => (StatusCode::INTERNAL_SERVER_ERROR, ErrorBody::new("internal", message)),
        };
        json(status, &body)
    }
}

type ApiResult = Result<Response, ApiError>;

fn json<T: Serialize>(status: StatusCode, body: &T) -> Response {
    (
        status,
        [(header::CONTENT_TYPE, HeaderValue::from_static("application/json"))],
        canonical::to_bytes(body),
    )
        .into_response()
}

/// Parses a JSON body, reporting shape problems as a `body` field error.
fn parse_body<T: DeserializeOwned>(bytes: &[u8]) -> Result<T, ApiError> {
    let value: serde_json::Value = serde_json::from_slice(bytes).map_err(|e| {
        Error::Parse {
            location: glc3d_core::error::Location { line: e.line() as u64, column: None },
            message: e.to_string(),
        }
    })?;
    serde_json::from_value(value).map_err(|e| {
        ApiError(SessionError::Invalid(vec![FieldError { field: "body".into(), message: e.to_string() }]))
    })
}

#[derive(Deserialize)]
struct CreateQuery {
    class_column: Option<String>,
}

#[derive(Serialize)]
struct SessionSummary {
    session: String,
    revision: u64,
    view: ViewKind,
    cases: usize,
    attributes: Vec<String>,
    classes: Vec<String>,
    rules: usize,
    positive_class: Option<String>,
}

async fn create_session(
    State(store): State<Arc<SessionStore>>,
    Query(q): Query<CreateQuery>,
    body: Bytes,
) -> ApiResult {
    let (source, _) = load_dataset(&body, q.class_column.as_deref().unwrap_or("class"))?;
    let session = store.create(source)?;
    let id = session.id.clone();
    let summary = store.read(&id, |s| Ok(summarize(s)))?;
    Ok(json(StatusCode::CREATED, &summary))
}

fn summarize(s: &crate::session::Session) -> SessionSummary {
    SessionSummary {
        session: s.id.clone(),
        revision: s.revision,
        view: s.view,
        cases: s.dataset().len(),
        attributes: s.dataset().attribute_names().to_vec(),
        classes: s.dataset().class_labels().to_vec(),
        rules: s.rules.len(),
        positive_class: s.model.as_ref().map(|m| m.positive_class.clone()),
    }
}

async fn session_summary(State(store): State<Arc<SessionStore>>, Path(id): Path<String>) -> ApiResult {
    let summary = store.read(&id, |s| Ok(summarize(s)))?;
    Ok(json(StatusCode::OK, &summary))
}

async fn delete_session(State(store): State<Arc<SessionStore>>, Path(id): Path<String>) -> ApiResult {
    store.delete(&id)?;
    Ok(StatusCode::NO_CONTENT.into_response())
}

#[derive(Deserialize)]
struct SceneQuery {
    view: Option<String>,
    reference: Option<usize>,
}

async fn get_scene(
    State(store): State<Arc<SessionStore>>,
    Path(id): Path<String>,
    Query(q): Query<SceneQuery>,
) -> ApiResult {
    let view = q.view.as_deref().map(str::parse::<ViewKind>).transpose()?;
    let (revision, bytes) = store.read(&id, |s| Ok((s.revision, scene::serialize(&s.scene(view, q.reference)?))))?;
    Ok((
        StatusCode::OK,
        [
            (header::CONTENT_TYPE, HeaderValue::from_static("application/json")),
            (header::HeaderName::from_static(REVISION_HEADER), HeaderValue::from(revision)),
        ],
        bytes,
    )
        .into_response())
}

/// Statistics for the active model and every rule, at one revision.
#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct StatsResponse {
    pub revision: u64,
    pub model: Option<RuleStats>,
    pub rules: Vec<RuleStats>,
}

async fn get_stats(State(store): State<Arc<SessionStore>>, Path(id): Path<String>) -> ApiResult {
    let body = store.read(&id, |s| {
        Ok(StatsResponse { revision: s.revision, model: s.model_stats()?, rules: s.all_rule_stats()? })
    })?;
    Ok(json(StatusCode::OK, &body))
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct MutationResponse {
    pub revision: u64,
    pub stats: RuleStats,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelPut {
    revision: u64,
    model: ModelRequest,
}

#[derive(Serialize)]
struct ModelResponse {
    revision: u64,
    stats: RuleStats,
    coefficients: Vec<f64>,
    raw_coefficients: Vec<f64>,
    threshold: Option<f64>,
    positive_class: String,
}

async fn put_model(State(store): State<Arc<SessionStore>>, Path(id): Path<String>, body: Bytes) -> ApiResult {
    let req: ModelPut = parse_body(&body)?;
    let response = store.mutate(&id, |s| {
        let (revision, stats) = s.put_model(req.revision, req.model)?;
        let m = s.model.as_ref().expect("model set");
        Ok(ModelResponse {
            revision,
            stats,
            coefficients: m.model.coefficients().to_vec(),
            raw_coefficients: m.model.raw_coefficients().to_vec(),
            threshold: m.model.threshold(),
            positive_class: m.positive_class.clone(),
        })
    })?;
    Ok(json(StatusCode::OK, &response))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RulePut {
    revision: u64,
    rule: RuleDocument,
}

async fn put_rule(
    State(store): State<Arc<SessionStore>>,
    Path((id, index)): Path<(String, usize)>,
    body: Bytes,
) -> ApiResult {
    let req: RulePut = parse_body(&body)?;
    let (revision, stats) = store.mutate(&id, |s| s.put_rule(req.revision, index, req.rule))?;
    Ok(json(StatusCode::OK, &MutationResponse { revision, stats }))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RevisionOnly {
    revision: u64,
}

async fn delete_rule(
    State(store): State<Arc<SessionStore>>,
    Path((id, index)): Path<(String, usize)>,
    body: Bytes,
) -> ApiResult {
    let req: RevisionOnly = parse_body(&body)?;
    let revision = store.mutate(&id, |s| s.delete_rule(req.revision, index))?;
    Ok(json(StatusCode::OK, &BTreeMap::from([("revision", revision)])))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ViewPut {
    revision: u64,
    view: String,
}

async fn put_view(State(store): State<Arc<SessionStore>>, Path(id): Path<String>, body: Bytes) -> ApiResult {
    let req: ViewPut = parse_body(&body)?;
    let view: ViewKind = req.view.parse().map_err(|e: Error| match e {
        Error::Lookup { valid, name, .. } => ApiError(SessionError::Invalid(vec![FieldError {
            field: "view".into(),
            message: format!("unknown view '{name}' (valid: {})", valid.join(", ")),
        }])),
        other => other.into(),
    })?;
    let revision = store.mutate(&id, |s| s.set_view(req.revision, view))?;
    Ok(json(StatusCode::OK, &BTreeMap::from([("revision", revision)])))
}

/// Serves the API until Ctrl-C.
pub async fn serve(addr: &str, store: Arc<SessionStore>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("glc3d listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(store))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
