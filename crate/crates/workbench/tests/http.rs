mod common;

use std::sync::Arc;

use axum::http::{Method, StatusCode};
use axum::Router;
use common::*;
use glc3d_core::datasets::IRIS_CSV;
use glc3d_core::formats::RuleDocument;
use glc3d_core::rules::Refine;
use glc3d_core::scene::{deserialize, OverlayKind};
use glc3d_core::{Rect, Rule};
use glc3d_workbench::http::router;
use glc3d_workbench::session::SessionStore;
use serde_json::{json, Value};

fn app() -> Router {
    router(Arc::new(SessionStore::new(None)))
}

async fn upload(app: &Router) -> String {
    let r = call(app, Method::POST, "/sessions", IRIS_CSV).await;
    assert_eq!(r.status, StatusCode::CREATED);
    let v = r.json();
    assert_eq!(v["revision"], 0);
    assert_eq!(v["cases"], 150);
    v["session"].as_str().unwrap().to_string()
}

fn rule_body(revision: u64, rule: &Rule) -> Vec<u8> {
    serde_json::to_vec(&json!({ "revision": revision, "rule": RuleDocument::from_rule(rule) })).unwrap()
}

fn search_body(revision: u64, class: &str, seed: u64) -> Vec<u8> {
    serde_json::to_vec(&json!({
        "revision": revision,
        "model": { "positive_class": class, "search": { "seed": seed } }
    }))
    .unwrap()
}

#[tokio::test]
async fn upload_search_and_render() {
    let app = app();
    let id = upload(&app).await;
    let r = call(&app, Method::PUT, &format!("/sessions/{id}/model"), search_body(0, SETOSA, 1)).await;
    assert_eq!(r.status, StatusCode::OK);
    let v = r.json();
    assert_eq!(v["revision"], 1);
    assert_eq!(v["stats"]["accuracy"].as_f64(), Some(1.0));

    let r = call(&app, Method::GET, &format!("/sessions/{id}/scene?view=spc3d"), "").await;
    assert_eq!(r.status, StatusCode::OK);
    assert_eq!(r.revision(), 1);
    let scene = deserialize(&r.body).unwrap();
    assert_eq!(scene.glyphs.len(), 150);
    assert_eq!(scene.overlays_of(OverlayKind::ThresholdPlane).count(), 1);

    let again = call(&app, Method::GET, &format!("/sessions/{id}/scene?view=spc3d"), "").await;
    assert_eq!(again.body, r.body);
}

#[tokio::test]
async fn rule_edits_report_stats_and_revisions() {
    let app = app();
    let id = upload(&app).await;
    let uri = format!("/sessions/{id}/rules/0");
    let r = call(&app, Method::PUT, &uri, rule_body(0, &setosa_rule())).await;
    assert_eq!(r.status, StatusCode::OK);
    let v = r.json();
    assert_eq!(v["revision"], 1);
    assert_eq!(v["stats"]["covered"], 50);
    assert_eq!(v["stats"]["purity"].as_f64(), Some(1.0));

    // shrinking the rectangle never covers more
    let mut covered = 50;
    let mut revision = 1;
    for step in 1..=10 {
        let hi = SETOSA_BOX[1] * (1.0 - step as f64 * 0.08);
        let rule = setosa_rule().refine(1, Rect::new(0.0, hi, 0.0, SETOSA_BOX[3]).unwrap()).unwrap();
        let v = call(&app, Method::PUT, &uri, rule_body(revision, &rule)).await.json();
        assert_eq!(v["revision"], revision + 1);
        revision += 1;
        let now = v["stats"]["covered"].as_u64().unwrap();
        assert!(now <= covered);
        covered = now;
    }

    let stats = call(&app, Method::GET, &format!("/sessions/{id}/stats"), "").await.json();
    assert_eq!(stats["revision"], revision);
    assert_eq!(stats["rules"][0]["covered"], covered);
    assert_eq!(stats["model"], Value::Null);
}

#[tokio::test]
async fn stale_revision_conflicts() {
    let app = app();
    let id = upload(&app).await;
    let uri = format!("/sessions/{id}/rules/0");
    assert_eq!(call(&app, Method::PUT, &uri, rule_body(0, &setosa_rule())).await.status, StatusCode::OK);
    let r = call(&app, Method::PUT, &uri, rule_body(0, &setosa_rule())).await;
    assert_eq!(r.status, StatusCode::CONFLICT);
    let v = r.json();
    assert_eq!(v["error"], "conflict");
    assert_eq!(v["current_revision"], 1);
}

#[tokio::test]
async fn invalid_payloads_list_fields() {
    let app = app();
    let id = upload(&app).await;
    let body = json!({
        "revision": 0,
        "rule": {
            "format_version": 1,
            "dimension": 4,
            "predicted_class": "Iris-purpurea",
            "intervals": [{ "attribute": 9, "lower": -0.5, "upper": 0.5 }]
        }
    });
    let r = call(&app, Method::PUT, &format!("/sessions/{id}/rules/0"), body.to_string()).await;
    assert_eq!(r.status, StatusCode::UNPROCESSABLE_ENTITY);
    let v = r.json();
    assert_eq!(v["error"], "validation");
    let fields: Vec<&str> = v["fields"].as_array().unwrap().iter().map(|f| f["field"].as_str().unwrap()).collect();
    assert_eq!(fields, ["rule.predicted_class", "rule.intervals[0].attribute", "rule.intervals[0].lower"]);

    let model = json!({ "revision": 0, "model": { "positive_class": SETOSA, "coefficients": [1, 2] } });
    let v = call(&app, Method::PUT, &format!("/sessions/{id}/model"), model.to_string()).await.json();
    let fields: Vec<&str> = v["fields"].as_array().unwrap().iter().map(|f| f["field"].as_str().unwrap()).collect();
    assert_eq!(fields, ["coefficients", "threshold"]);

    let r = call(&app, Method::PUT, &format!("/sessions/{id}/model"), "{not json").await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
    let r = call(&app, Method::PUT, &format!("/sessions/{id}/model"), r#"{"revision":0}"#).await;
    assert_eq!(r.status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(r.json()["fields"][0]["field"], "body");

    // nothing above was applied
    let v = call(&app, Method::GET, &format!("/sessions/{id}"), "").await.json();
    assert_eq!(v["revision"], 0);
}

#[tokio::test]
async fn scene_needs_model_for_height_views() {
    let app = app();
    let id = upload(&app).await;
    let r = call(&app, Method::GET, &format!("/sessions/{id}/scene?view=glcl"), "").await;
    assert_eq!(r.status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(r.json()["error"], "configuration");
    let r = call(&app, Method::GET, &format!("/sessions/{id}/scene?view=diagonal"), "").await;
    assert_eq!(r.json()["error"], "lookup");
    assert!(r.json()["valid"].as_array().unwrap().contains(&json!("spc3d")));
    let r = call(&app, Method::GET, &format!("/sessions/{id}/scene"), "").await;
    assert_eq!(r.status, StatusCode::OK);
    assert_eq!(deserialize(&r.body).unwrap().view.as_str(), "spc2d");
}

#[tokio::test]
async fn view_and_rule_deletion() {
    let app = app();
    let id = upload(&app).await;
    let r = call(&app, Method::PUT, &format!("/sessions/{id}/view"), r#"{"revision":0,"view":"stc"}"#).await;
    assert_eq!(r.json()["revision"], 1);
    let r = call(&app, Method::PUT, &format!("/sessions/{id}/view"), r#"{"revision":1,"view":"cubes"}"#).await;
    assert_eq!(r.json()["fields"][0]["field"], "view");
    let scene = call(&app, Method::GET, &format!("/sessions/{id}/scene"), "").await;
    assert_eq!(deserialize(&scene.body).unwrap().view.as_str(), "stc");

    call(&app, Method::PUT, &format!("/sessions/{id}/rules/0"), rule_body(1, &setosa_rule())).await;
    let r = call(&app, Method::DELETE, &format!("/sessions/{id}/rules/3"), r#"{"revision":2}"#).await;
    assert_eq!(r.status, StatusCode::UNPROCESSABLE_ENTITY);
    let r = call(&app, Method::DELETE, &format!("/sessions/{id}/rules/0"), r#"{"revision":2}"#).await;
    assert_eq!(r.json()["revision"], 3);
    let stats = call(&app, Method::GET, &format!("/sessions/{id}/stats"), "").await.json();
    assert_eq!(stats["rules"], json!([]));
}

#[tokio::test]
async fn unknown_and_deleted_sessions() {
    let app = app();
    let r = call(&app, Method::GET, "/sessions/nope/scene", "").await;
    assert_eq!(r.status, StatusCode::NOT_FOUND);
    assert_eq!(r.json()["error"], "not-found");
    let id = upload(&app).await;
    assert_eq!(call(&app, Method::DELETE, &format!("/sessions/{id}"), "").await.status, StatusCode::NO_CONTENT);
    assert_eq!(call(&app, Method::GET, &format!("/sessions/{id}/stats"), "").await.status, StatusCode::NOT_FOUND);
    assert_eq!(call(&app, Method::DELETE, &format!("/sessions/{id}"), "").await.status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn bad_upload() {
    let app = app();
    let r = call(&app, Method::POST, "/sessions", "a,b,class\n1,x,A\n").await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
    assert_eq!(r.json()["error"], "parse");
    let r = call(&app, Method::POST, "/sessions?class_column=label", IRIS_CSV).await;
    assert_eq!(r.status, StatusCode::UNPROCESSABLE_ENTITY);
    let r = call(&app, Method::POST, "/sessions?class_column=class", IRIS_CSV).await;
    assert_eq!(r.status, StatusCode::CREATED);
}

#[tokio::test]
async fn sessions_are_independent() {
    let app = app();
    let a = upload(&app).await;
    let b = upload(&app).await;
    assert_ne!(a, b);
    call(&app, Method::PUT, &format!("/sessions/{a}/rules/0"), rule_body(0, &setosa_rule())).await;
    let v = call(&app, Method::GET, &format!("/sessions/{b}"), "").await.json();
    assert_eq!(v["revision"], 0);
    assert_eq!(v["rules"], 0);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_edits_serialize_per_session() {
    let app = app();
    let id = upload(&app).await;
    let uri = format!("/sessions/{id}/rules/0");
    // every writer claims revision 0; exactly one may win
    let tasks: Vec<_> = (0..8)
        .map(|_| {
            let app = app.clone();
            let uri = uri.clone();
            tokio::spawn(async move { call(&app, Method::PUT, &uri, rule_body(0, &setosa_rule())).await.status })
        })
        .collect();
    let mut ok = 0;
    for t in tasks {
        match t.await.unwrap() {
            StatusCode::OK => ok += 1,
            StatusCode::CONFLICT => {}
            other => panic!("unexpected {other}"),
        }
    }
    assert_eq!(ok, 1);
    let v = call(&app, Method::GET, &format!("/sessions/{id}"), "").await.json();
    assert_eq!(v["revision"], 1);
}

#[tokio::test]
async fn snapshots_survive_restart() {
    let dir = tempfile::tempdir().unwrap();
    let app = router(Arc::new(SessionStore::new(Some(dir.path().to_path_buf()))));
    let id = upload(&app).await;
    call(&app, Method::PUT, &format!("/sessions/{id}/model"), search_body(0, SETOSA, 1)).await;
    call(&app, Method::PUT, &format!("/sessions/{id}/rules/0"), rule_body(1, &setosa_rule())).await;
    let before = call(&app, Method::GET, &format!("/sessions/{id}/stats"), "").await.body;
    let scene_before = call(&app, Method::GET, &format!("/sessions/{id}/scene?view=glc3sl"), "").await.body;

    let restarted = router(Arc::new(SessionStore::restore(dir.path().to_path_buf()).unwrap()));
    assert_eq!(call(&restarted, Method::GET, &format!("/sessions/{id}/stats"), "").await.body, before);
    let scene_after = call(&restarted, Method::GET, &format!("/sessions/{id}/scene?view=glc3sl"), "").await.body;
    assert_eq!(scene_after, scene_before);
}
