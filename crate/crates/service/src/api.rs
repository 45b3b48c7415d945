//! HTTP routes under `/api/v1`.

use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use resyduo_core::{ProjectionKind, RecommendationList};
use serde::Deserialize;
use serde_json::{json, Value};

use crate::error::{Result, ServiceError};
use crate::models::{Catalog, ModelSet};
use crate::recommend::{recommend_type1, recommend_type2, recommend_type3};
use crate::store::{DraftInput, ProjectStore};

#[derive(Clone)]
pub struct AppState {
    pub models: Arc<ModelSet>,
    pub catalog: Arc<Catalog>,
    pub store: Arc<ProjectStore>,
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.status()).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        if status.is_server_error() {
            tracing::error!(error = %self, "request failed");
        }
        let body = json!({ "error": { "code": self.code(), "message": self.to_string() } });
        (status, Json(body)).into_response()
    }
}

fn body<T>(payload: std::result::Result<Json<T>, JsonRejection>) -> Result<T> {
    payload
        .map(|Json(v)| v)
        .map_err(|e| ServiceError::InvalidRequest(e.body_text()))
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/v1/health", get(health))
        .route("/api/v1/catalog/tags", get(catalog_tags))
        .route("/api/v1/catalog/components", get(catalog_components))
        .route("/api/v1/recommend/components-by-tags", post(by_tags))
        .route("/api/v1/recommend/components-by-project", post(by_project))
        .route("/api/v1/recommend/libraries", post(libraries))
        .route("/api/v1/projects", get(list_projects).post(create_project))
        .route(
            "/api/v1/projects/{id}",
            get(get_project).put(update_project).delete(delete_project),
        )
        .route("/api/v1/projects/{id}/sketch", get(get_sketch).put(put_sketch))
        .fallback(|| async { ServiceError::NotFound("no such route".into()) })
        .with_state(state)
}

async fn health(State(s): State<AppState>) -> Json<Value> {
    let loaded = |k| s.models.get(k).is_some();
    Json(json!({
        "status": "ok",
        "models": {
            "T": loaded(ProjectionKind::T),
            "P": loaded(ProjectionKind::P),
            "L": loaded(ProjectionKind::L),
        }
    }))
}

#[derive(Deserialize)]
struct PrefixQuery {
    #[serde(default)]
    prefix: String,
}

async fn catalog_tags(State(s): State<AppState>, Query(q): Query<PrefixQuery>) -> Json<Vec<String>> {
    Json(s.catalog.tags_with_prefix(&q.prefix))
}

async fn catalog_components(State(s): State<AppState>, Query(q): Query<PrefixQuery>) -> Json<Value> {
    let items: Vec<Value> = s
        .catalog
        .components_with_prefix(&q.prefix)
        .into_iter()
        .map(|(id, name)| json!({ "id": id, "name": name }))
        .collect();
    Json(Value::Array(items))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TagsRequest {
    tags: Vec<String>,
    n: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ComponentsRequest {
    components: Vec<String>,
    n: usize,
}

fn items(list: RecommendationList, key: &str) -> Json<Value> {
    let items: Vec<Value> = list
        .entries
        .into_iter()
        .map(|e| json!({ key: e.item, "score": e.score }))
        .collect();
    Json(json!({ "items": items }))
}

async fn by_tags(
    State(s): State<AppState>,
    payload: std::result::Result<Json<TagsRequest>, JsonRejection>,
) -> Result<Json<Value>> {
    let req = body(payload)?;
    let list = recommend_type1(s.models.require(ProjectionKind::T)?, &req.tags, req.n)?;
    Ok(items(list, "id"))
}

async fn by_project(
    State(s): State<AppState>,
    payload: std::result::Result<Json<ComponentsRequest>, JsonRejection>,
) -> Result<Json<Value>> {
    let req = body(payload)?;
    let list = recommend_type2(s.models.require(ProjectionKind::P)?, &req.components, req.n)?;
    Ok(items(list, "id"))
}

async fn libraries(
    State(s): State<AppState>,
    payload: std::result::Result<Json<ComponentsRequest>, JsonRejection>,
) -> Result<Json<Value>> {
    let req = body(payload)?;
    let list = recommend_type3(s.models.require(ProjectionKind::L)?, &req.components, req.n)?;
    Ok(items(list, "name"))
}

async fn list_projects(State(s): State<AppState>) -> Json<Value> {
    Json(json!(s.store.list()))
}

async fn create_project(
    State(s): State<AppState>,
    payload: std::result::Result<Json<DraftInput>, JsonRejection>,
) -> Result<(StatusCode, Json<Value>)> {
    let draft = s.store.create(body(payload)?)?;
    Ok((StatusCode::CREATED, Json(json!(draft))))
}

async fn get_project(State(s): State<AppState>, Path(id): Path<String>) -> Result<Json<Value>> {
    Ok(Json(json!(s.store.get(&id)?)))
}

async fn update_project(
    State(s): State<AppState>,
    Path(id): Path<String>,
    payload: std::result::Result<Json<DraftInput>, JsonRejection>,
) -> Result<Json<Value>> {
    Ok(Json(json!(s.store.update(&id, body(payload)?)?)))
}

async fn delete_project(State(s): State<AppState>, Path(id): Path<String>) -> Result<StatusCode> {
    s.store.delete(&id)?;
    Ok(StatusCode::NO_CONTENT)
}

async fn get_sketch(State(s): State<AppState>, Path(id): Path<String>) -> Result<Response> {
    let sketch = s.store.sketch(&id)?;
    Ok(([(header::CONTENT_TYPE, "text/plain; charset=utf-8")], sketch).into_response())
}

async fn put_sketch(State(s): State<AppState>, Path(id): Path<String>, bytes: Bytes) -> Result<StatusCode> {
    let text = String::from_utf8(bytes.to_vec())
        .map_err(|_| ServiceError::InvalidRequest("sketch must be UTF-8 text".into()))?;
    s.store.put_sketch(&id, text)?;
    Ok(StatusCode::NO_CONTENT)
}
