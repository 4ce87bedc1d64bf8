mod common;

use std::sync::Arc;

use axum::http::{Method, StatusCode};
use common::*;
use glc3d_core::datasets::IRIS_CSV;
use glc3d_core::formats::{rule_to_bytes, ModelDocument, RuleDocument};
use glc3d_core::scene::{deserialize, Visibility};
use glc3d_core::{canonical, Hyperblock, Rule};
use glc3d_workbench::http::router;
use glc3d_workbench::session::SessionStore;
use serde_json::json;

fn stdout(o: &std::process::Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &std::process::Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn search_then_render() {
    let dir = tempfile::tempdir().unwrap();
    let data = iris_file(dir.path());
    let model = dir.path().join("setosa.model");
    let o = glc3d(&["search", "--data", path(&data), "--class", SETOSA, "--seed", "1", "--out", path(&model)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("accuracy 1.000\n"));
    let doc = ModelDocument::parse(&std::fs::read_to_string(&model).unwrap()).unwrap();
    assert_eq!(doc.positive_class.as_deref(), Some(SETOSA));

    let out = dir.path().join("scene.json");
    let o = glc3d(&["render", "--data", path(&data), "--view", "spc3d", "--model", path(&model), "--out", path(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let scene = deserialize(&std::fs::read(&out).unwrap()).unwrap();
    assert_eq!(scene.glyphs.len(), 150);
}

#[test]
fn search_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let data = iris_file(dir.path());
    let (a, b) = (dir.path().join("a.model"), dir.path().join("b.model"));
    for out in [&a, &b] {
        let o = glc3d(&["search", "--data", path(&data), "--class", VERSICOLOR, "--seed", "7", "--out", path(out)]);
        assert!(o.status.success());
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn search_unknown_class() {
    let dir = tempfile::tempdir().unwrap();
    let data = iris_file(dir.path());
    let o = glc3d(&["search", "--data", path(&data), "--class", "Iris-purpurea", "--out", path(&dir.path().join("m"))]);
    assert_eq!(o.status.code(), Some(6));
    assert!(stderr(&o).contains("Iris-purpurea"));
    assert!(stderr(&o).contains(SETOSA));
}

#[test]
fn eval_setosa_rule_and_full_cube() {
    let dir = tempfile::tempdir().unwrap();
    let data = iris_file(dir.path());
    let rule = setosa_rule_file(dir.path());
    let o = glc3d(&["eval", "--data", path(&data), "--rule", path(&rule)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("covered 50\npurity 1.000\n"), "{text}");

    let full = write_file(dir.path(), "full.json", &rule_to_bytes(&Rule::new(SETOSA, Hyperblock::full(4))));
    let o = glc3d(&["eval", "--data", path(&data), "--rule", path(&full)]);
    assert!(stdout(&o).contains("covered 150\n"));
}

#[test]
fn error_exit_statuses() {
    let dir = tempfile::tempdir().unwrap();
    let data = iris_file(dir.path());
    let out = dir.path().join("scene.json");

    let missing = dir.path().join("absent.csv");
    let o = glc3d(&["render", "--data", path(&missing), "--view", "spc2d", "--out", path(&out)]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains(path(&missing)));

    let o = glc3d(&["render", "--data", path(&data), "--view", "spc3d", "--out", path(&out)]);
    assert_eq!(o.status.code(), Some(5));
    assert!(stderr(&o).contains("model"));
    assert!(!out.exists());

    let three = write_file(dir.path(), "three.json", &rule_to_bytes(&Rule::new(SETOSA, Hyperblock::full(3))));
    let o = glc3d(&["eval", "--data", path(&data), "--rule", path(&three)]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains("3 attributes"));

    let o = glc3d(&["render", "--data", path(&data), "--view", "cubes", "--out", path(&out)]);
    assert_eq!(o.status.code(), Some(2));

    let bad = write_file(dir.path(), "bad.csv", b"a,b,class\n1,2,A\n3,oops,B\n");
    let o = glc3d(&["eval", "--data", path(&bad), "--rule", path(&three)]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
}

#[test]
fn discriminant_rule_needs_model() {
    let dir = tempfile::tempdir().unwrap();
    let data = iris_file(dir.path());
    let rule = write_file(
        dir.path(),
        "d.json",
        &rule_to_bytes(&Rule::new(SETOSA, Hyperblock::full(4)).with_discriminant("setosa.model")),
    );
    let o = glc3d(&["eval", "--data", path(&data), "--rule", path(&rule)]);
    assert_eq!(o.status.code(), Some(5));

    let model = dir.path().join("setosa.model");
    glc3d(&["search", "--data", path(&data), "--class", SETOSA, "--seed", "1", "--out", path(&model)]);
    let o = glc3d(&["eval", "--data", path(&data), "--rule", path(&rule), "--model", path(&model)]);
    assert!(stdout(&o).contains("covered 50\npurity 1.000\n"));
}

#[test]
fn render_grays_uncovered_cases() {
    let dir = tempfile::tempdir().unwrap();
    let data = iris_file(dir.path());
    let rule = setosa_rule_file(dir.path());
    let out = dir.path().join("scene.json");
    let o = glc3d(&["render", "--data", path(&data), "--view", "stc", "--rule", path(&rule), "--out", path(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let scene = deserialize(&std::fs::read(&out).unwrap()).unwrap();
    assert_eq!(scene.count(Visibility::Normal), 50);
    assert_eq!(scene.count(Visibility::Grayed), 100);
}

#[tokio::test]
async fn cli_and_http_agree() {
    let dir = tempfile::tempdir().unwrap();
    let data = iris_file(dir.path());
    let rule_path = setosa_rule_file(dir.path());
    let model_path = dir.path().join("setosa.model");
    glc3d(&["search", "--data", path(&data), "--class", SETOSA, "--seed", "1", "--out", path(&model_path)]);
    let cli_stats = glc3d(&["eval", "--data", path(&data), "--rule", path(&rule_path), "--format", "json"]).stdout;
    let scene_path = dir.path().join("scene.json");
    let o = glc3d(&[
        "render", "--data", path(&data), "--view", "spc3d", "--model", path(&model_path),
        "--rule", path(&rule_path), "--out", path(&scene_path),
    ]);
    assert!(o.status.success());

    let app = router(Arc::new(SessionStore::new(None)));
    let id = call(&app, Method::POST, "/sessions", IRIS_CSV).await.json()["session"].as_str().unwrap().to_string();
    let search = json!({ "revision": 0, "model": { "positive_class": SETOSA, "search": { "seed": 1 } } });
    let m = call(&app, Method::PUT, &format!("/sessions/{id}/model"), search.to_string()).await.json();
    let doc = ModelDocument::parse(&std::fs::read_to_string(&model_path).unwrap()).unwrap();
    let http_raw: Vec<f64> = m["raw_coefficients"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    assert_eq!(http_raw, doc.model.raw_coefficients());
    assert_eq!(m["threshold"].as_f64(), doc.model.threshold());

    let rule: RuleDocument = serde_json::from_slice(&std::fs::read(&rule_path).unwrap()).unwrap();
    let body = json!({ "revision": 1, "rule": rule });
    let r = call(&app, Method::PUT, &format!("/sessions/{id}/rules/0"), body.to_string()).await;
    assert_eq!(r.status, StatusCode::OK);
    let stats = call(&app, Method::GET, &format!("/sessions/{id}/stats"), "").await.json();
    assert_eq!(canonical::to_bytes(&stats["rules"][0]), cli_stats);

    let scene = call(&app, Method::GET, &format!("/sessions/{id}/scene?view=spc3d"), "").await;
    assert_eq!(scene.body, std::fs::read(&scene_path).unwrap());
}
