//! Drives the HTTP API in-process: creates a testing experiment on the
//! bundled trivia bank, runs two participants to completion and prints the
//! report summary.
//!
//! cargo run --release -p bayesadapt-service --example live_session

use std::sync::Arc;

use axum::body::Body;
use axum::http::Request;
use axum::Router;
use bayesadapt::model::ItemBank;
use bayesadapt_service::api::{router, AppState};
use bayesadapt_service::config::ServiceConfig;
use bayesadapt_service::store::Registry;
use serde_json::{json, Value};
use tower::ServiceExt;

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> Value {
    let req = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(b) => req.header("content-type", "application/json").body(Body::from(b.to_string())),
        None => req.body(Body::empty()),
    }
    .expect("valid request");
    let resp = app.clone().oneshot(req).await.expect("infallible router");
    let bytes = axum::body::to_bytes(resp.into_body(), usize::MAX).await.expect("body");
    serde_json::from_slice(&bytes).unwrap_or(Value::Null)
}

#[tokio::main]
async fn main() {
    let dir = tempfile::tempdir().expect("temp dir");
    let cfg = ServiceConfig {
        data_dir: dir.path().to_path_buf(),
        ..ServiceConfig::default()
    };
    let registry = Arc::new(Registry::open(&cfg).expect("registry"));
    let app = router(AppState {
        registry,
        admin_token: None,
    });

    let bank = concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/trivia_items.csv");
    let key = ItemBank::from_csv_path(bank).expect("bundled bank");
    let created = call(
        &app,
        "POST",
        "/experiments",
        Some(json!({
            "mode": "adaptive-testing",
            "item_bank": {"csv": bank},
            "termination": {"kind": "rule", "epsilon": 0.02, "min_trials": 3},
            "budget": {"n_outer": 500, "n_inner": 500, "s_util": 100},
            "seed": 1
        })),
    )
    .await;
    let id = created["experiment_id"].as_str().expect("experiment id").to_owned();
    println!("experiment {id}");

    for (pid, knows_everything) in [("alice", true), ("bob", false)] {
        call(&app, "POST", &format!("/experiments/{id}/participants"), Some(json!({"participant_id": pid}))).await;
        loop {
            let next = call(&app, "GET", &format!("/experiments/{id}/participants/{pid}/next"), None).await;
            if next["status"] == "finished" {
                println!("{pid}: finished after {} trials", next["trials"]);
                break;
            }
            let item = key.get(next["item_id"].as_u64().expect("item id") as usize).expect("known item");
            let answer = if knows_everything { item.accepted_answers[0].as_str() } else { "no idea" };
            let token = next["token"].as_str().expect("token");
            let out = call(&app, "POST", &format!("/trials/{token}/answer"), Some(json!({"answer": answer, "duration_s": 4.0}))).await;
            println!("{pid}: item {} -> y = {}", next["item_id"], out["y"]);
        }
    }

    let report = call(&app, "GET", &format!("/experiments/{id}/report"), None).await;
    for p in report["participants"].as_array().into_iter().flatten() {
        println!(
            "{}: ability {:.2} ± {:.2}, information gain {:.3} nats",
            p["participant_id"].as_str().unwrap_or("?"),
            p["ability"]["mean"].as_f64().unwrap_or(f64::NAN),
            p["ability"]["sd"].as_f64().unwrap_or(f64::NAN),
            p["information_gain"].as_f64().unwrap_or(f64::NAN),
        );
    }
}
