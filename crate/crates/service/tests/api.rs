use std::collections::BTreeMap;
use std::path::Path;

use axum::body::Body;
use axum::http::{header, Request, StatusCode};
use http_body_util::BodyExt;
use resyduo_core::persist::save_model;
use resyduo_core::{
    build_projection, build_similarity_model, parse_corpus, Execution, KnnConfig, ProjectionKind, RatingMatrix,
};
use resyduo_service::models::{corpus_path, matrix_path, model_path};
use resyduo_service::{router, AppState, ModelSet};
use serde_json::{json, Value};
use tower::ServiceExt;

const CORPUS: &str = r#"[
  {"id":"p1","title":"Plant monitor","tags":["Garden","IoT"],
   "components":[{"id":"c1","name":"Soil sensor"},{"id":"c2","name":"Relay"}],"libraries":["wire"]},
  {"id":"p2","title":"Weather","tags":["iot","weather"],
   "components":[{"id":"c2","name":"Relay"},{"id":"c3","name":"BME280"}],"libraries":["wire","adafruit_bme280"]},
  {"id":"p3","title":"Rover","tags":["robot"],
   "components":[{"id":"c4","name":"Motor driver"},{"id":"c3","name":"BME280"}],"libraries":["servo"]},
  {"id":"p4","title":"Greenhouse","tags":["garden","weather"],
   "components":[{"id":"c1","name":"Soil sensor"},{"id":"c3","name":"BME280"}],"libraries":["adafruit_bme280"]}
]"#;

fn write_data_dir(dir: &Path) {
    std::fs::write(corpus_path(dir), CORPUS).unwrap();
    let corpus = parse_corpus(CORPUS.as_bytes()).unwrap();
    for kind in ProjectionKind::ALL {
        let m = build_projection(&corpus, kind).unwrap();
        m.save(&matrix_path(dir, kind)).unwrap();
        let model = build_similarity_model(m, KnnConfig::default(), Execution::Sequential).unwrap();
        save_model(&model, &model_path(dir, kind)).unwrap();
    }
}

struct Harness {
    _dir: tempfile::TempDir,
    state: AppState,
}

fn harness() -> Harness {
    let dir = tempfile::tempdir().unwrap();
    write_data_dir(dir.path());
    let state = AppState::from_data_dir(dir.path(), false).unwrap();
    Harness { _dir: dir, state }
}

async fn call(state: &AppState, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let mut req = Request::builder().method(method).uri(uri);
    let body = match body {
        Some(v) => {
            req = req.header(header::CONTENT_TYPE, "application/json");
            Body::from(v.to_string())
        }
        None => Body::empty(),
    };
    let resp = router(state.clone()).oneshot(req.body(body).unwrap()).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let value = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap() };
    (status, value)
}

#[tokio::test]
async fn health_reports_loaded_models() {
    let h = harness();
    let (status, body) = call(&h.state, "GET", "/api/v1/health", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body, json!({"status": "ok", "models": {"T": true, "P": true, "L": true}}));

    let empty = AppState::new(ModelSet::default(), &BTreeMap::new(), None).unwrap();
    let (_, body) = call(&empty, "GET", "/api/v1/health", None).await;
    assert_eq!(body["models"], json!({"T": false, "P": false, "L": false}));
    let (status, body) = call(&empty, "POST", "/api/v1/recommend/libraries", Some(json!({"components": ["c1"], "n": 1}))).await;
    assert_eq!(status, StatusCode::SERVICE_UNAVAILABLE);
    assert_eq!(body["error"]["code"], "model_unavailable");
}

#[tokio::test]
async fn catalog_prefix_search() {
    let h = harness();
    let (_, tags) = call(&h.state, "GET", "/api/v1/catalog/tags?prefix=G", None).await;
    assert_eq!(tags, json!(["garden"]));
    let (_, all) = call(&h.state, "GET", "/api/v1/catalog/tags", None).await;
    assert_eq!(all, json!(["garden", "iot", "robot", "weather"]));
    let (_, comps) = call(&h.state, "GET", "/api/v1/catalog/components?prefix=bme", None).await;
    assert_eq!(comps, json!([{"id": "c3", "name": "BME280"}]));
}

#[tokio::test]
async fn recommendation_endpoints_match_library_calls() {
    let h = harness();
    let models = &h.state.models;
    let t = resyduo_service::recommend_type1(models.t.as_ref().unwrap(), &["garden".into()], 3).unwrap();
    let (status, body) =
        call(&h.state, "POST", "/api/v1/recommend/components-by-tags", Some(json!({"tags": ["Garden"], "n": 3}))).await;
    assert_eq!(status, StatusCode::OK);
    let items = body["items"].as_array().unwrap();
    assert_eq!(items.len(), t.len());
    for (item, e) in items.iter().zip(&t.entries) {
        assert_eq!(item["id"], e.item.as_str());
        assert_eq!(item["score"].as_f64().unwrap(), e.score);
    }

    let (status, body) =
        call(&h.state, "POST", "/api/v1/recommend/components-by-project", Some(json!({"components": ["c1"], "n": 10}))).await;
    assert_eq!(status, StatusCode::OK);
    let ids: Vec<&str> = body["items"].as_array().unwrap().iter().map(|i| i["id"].as_str().unwrap()).collect();
    assert_eq!(ids.len(), 3);
    assert!(!ids.contains(&"c1"));

    let (status, body) =
        call(&h.state, "POST", "/api/v1/recommend/libraries", Some(json!({"components": ["c3", "c3"], "n": 2}))).await;
    assert_eq!(status, StatusCode::OK);
    let first = &body["items"][0];
    assert!(first["name"].is_string() && first["score"].is_number());
    assert!(first.get("id").is_none());
}

#[tokio::test]
async fn recommendation_errors_use_the_error_envelope() {
    let h = harness();
    let cases = [
        ("components-by-tags", json!({"tags": ["nope"], "n": 3}), 422, "unknown_tags"),
        ("components-by-tags", json!({"tags": [], "n": 3}), 400, "invalid_request"),
        ("components-by-tags", json!({"tags": ["iot"], "n": 0}), 400, "invalid_request"),
        ("components-by-tags", json!({"tagz": ["iot"], "n": 1}), 400, "invalid_request"),
        ("components-by-project", json!({"components": ["zz"], "n": 3}), 422, "insufficient_overlap"),
        ("libraries", json!({"components": ["zz"], "n": 3}), 422, "unknown_components"),
    ];
    for (path, body, status, code) in cases {
        let (got, payload) = call(&h.state, "POST", &format!("/api/v1/recommend/{path}"), Some(body)).await;
        assert_eq!(got.as_u16(), status, "{path} {payload}");
        assert_eq!(payload["error"]["code"], code);
        assert!(payload["error"]["message"].is_string());
    }
    let (status, payload) = call(&h.state, "GET", "/api/v1/nowhere", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(payload["error"]["code"], "not_found");
}

#[tokio::test]
async fn project_crud_and_sketch() {
    let h = harness();
    let (status, draft) = call(
        &h.state,
        "POST",
        "/api/v1/projects",
        Some(json!({"name": "Greenhouse", "selected_components": ["c1"]})),
    )
    .await;
    assert_eq!(status, StatusCode::CREATED);
    let id = draft["id"].as_str().unwrap().to_string();
    let (_, fetched) = call(&h.state, "GET", &format!("/api/v1/projects/{id}"), None).await;
    assert_eq!(fetched, draft);

    let (status, updated) = call(
        &h.state,
        "PUT",
        &format!("/api/v1/projects/{id}"),
        Some(json!({"selected_components": ["c1", "c3"]})),
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(updated["selected_components"], json!(["c1", "c3"]));
    assert_eq!(updated["name"], "Greenhouse");

    let (status, err) =
        call(&h.state, "PUT", &format!("/api/v1/projects/{id}"), Some(json!({"selected_components": ["cX"]}))).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(err["error"]["code"], "validation_error");
    assert!(err["error"]["message"].as_str().unwrap().contains("cX"));

    let sketch = "#include <Wire.h>\r\nvoid setup(){}\n\tvoid loop(){} // ✓";
    let req = Request::put(format!("/api/v1/projects/{id}/sketch"))
        .header(header::CONTENT_TYPE, "text/plain")
        .body(Body::from(sketch))
        .unwrap();
    let resp = router(h.state.clone()).oneshot(req).await.unwrap();
    assert_eq!(resp.status(), StatusCode::NO_CONTENT);
    let resp = router(h.state.clone())
        .oneshot(Request::get(format!("/api/v1/projects/{id}/sketch")).body(Body::empty()).unwrap())
        .await
        .unwrap();
    assert!(resp.headers()[header::CONTENT_TYPE].to_str().unwrap().starts_with("text/plain"));
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    assert_eq!(&bytes[..], sketch.as_bytes());

    let (_, list) = call(&h.state, "GET", "/api/v1/projects", None).await;
    assert_eq!(list.as_array().unwrap().len(), 1);
    let (status, _) = call(&h.state, "DELETE", &format!("/api/v1/projects/{id}"), None).await;
    assert_eq!(status, StatusCode::NO_CONTENT);
    let (status, err) = call(&h.state, "GET", &format!("/api/v1/projects/{id}"), None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(err["error"]["code"], "not_found");
}

#[tokio::test]
async fn responses_survive_a_restart() {
    let dir = tempfile::tempdir().unwrap();
    write_data_dir(dir.path());
    let request = json!({"tags": ["iot", "weather"], "n": 4});
    let first = AppState::from_data_dir(dir.path(), false).unwrap();
    let (_, a) = call(&first, "POST", "/api/v1/recommend/components-by-tags", Some(request.clone())).await;
    let (_, draft) = call(&first, "POST", "/api/v1/projects", Some(json!({"name": "kept"}))).await;
    drop(first);

    let second = AppState::from_data_dir(dir.path(), false).unwrap();
    let (_, b) = call(&second, "POST", "/api/v1/recommend/components-by-tags", Some(request)).await;
    assert_eq!(a, b);
    let (status, again) = call(&second, "GET", &format!("/api/v1/projects/{}", draft["id"].as_str().unwrap()), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(again, draft);
}

#[tokio::test]
async fn stale_model_blocks_startup_unless_forced() {
    let dir = tempfile::tempdir().unwrap();
    write_data_dir(dir.path());
    let changed = RatingMatrix::from_dense(&["garden", "iot"], &["c1"], &[vec![1.0], vec![0.0]]).unwrap();
    changed.save(&matrix_path(dir.path(), ProjectionKind::T)).unwrap();
    assert!(AppState::from_data_dir(dir.path(), false).is_err());
}
