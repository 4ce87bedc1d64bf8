#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use axum::body::Body;
use axum::http::{HeaderMap, Method, Request, StatusCode};
use axum::Router;
use glc3d_core::datasets::IRIS_CSV;
use glc3d_core::formats::rule_to_bytes;
use glc3d_core::{Hyperblock, Rect, Rule};
use glc3d_core::rules::Refine;
use http_body_util::BodyExt;
use tower::ServiceExt;

pub const SETOSA: &str = "Iris-setosa";
pub const VERSICOLOR: &str = "Iris-versicolor";

/// Petal length/width extent of Setosa in normalized units.
pub const SETOSA_BOX: [f64; 4] = [0.0, 0.15254237288135591, 0.0, 0.20833333333333334];

pub fn setosa_rule() -> Rule {
    let r = Rect::new(SETOSA_BOX[0], SETOSA_BOX[1], SETOSA_BOX[2], SETOSA_BOX[3]).unwrap();
    Rule::new(SETOSA, Hyperblock::full(4)).refine(1, r).unwrap()
}

pub fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, bytes).unwrap();
    path
}

pub fn iris_file(dir: &Path) -> PathBuf {
    write_file(dir, "iris.csv", IRIS_CSV.as_bytes())
}

pub fn setosa_rule_file(dir: &Path) -> PathBuf {
    write_file(dir, "setosa.rule.json", &rule_to_bytes(&setosa_rule()))
}

pub fn glc3d(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_glc3d")).args(args).output().unwrap()
}

pub fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

pub struct Reply {
    pub status: StatusCode,
    pub headers: HeaderMap,
    pub body: Vec<u8>,
}

impl Reply {
    pub fn json(&self) -> serde_json::Value {
        serde_json::from_slice(&self.body).unwrap()
    }

    pub fn revision(&self) -> u64 {
        self.headers["x-glc3d-revision"].to_str().unwrap().parse().unwrap()
    }
}

pub async fn call(app: &Router, method: Method, uri: &str, body: impl Into<Vec<u8>>) -> Reply {
    let request = Request::builder().method(method).uri(uri).body(Body::from(body.into())).unwrap();
    let response = app.clone().oneshot(request).await.unwrap();
    let status = response.status();
    let headers = response.headers().clone();
    let body = response.into_body().collect().await.unwrap().to_bytes().to_vec();
    Reply { status, headers, body }
}
