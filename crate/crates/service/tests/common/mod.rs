#![allow(dead_code)]

use std::path::Path;
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use bayesadapt_service::api::{router, AppState};
use bayesadapt_service::config::ServiceConfig;
use bayesadapt_service::store::Registry;
use serde_json::{json, Value};
use tower::ServiceExt;

pub struct App {
    pub router: Router,
    pub registry: Arc<Registry>,
}

pub fn open(dir: &Path, snapshot_every: u64) -> App {
    open_with(dir, snapshot_every, None)
}

pub fn open_with(dir: &Path, snapshot_every: u64, admin_token: Option<&str>) -> App {
    let cfg = ServiceConfig {
        data_dir: dir.to_path_buf(),
        snapshot_every,
        admin_token: admin_token.map(str::to_owned),
        ..ServiceConfig::default()
    };
    let registry = Arc::new(Registry::open(&cfg).unwrap());
    let router = router(AppState {
        registry: registry.clone(),
        admin_token: cfg.admin_token,
    });
    App { router, registry }
}

pub struct Reply {
    pub status: StatusCode,
    pub body: Value,
    pub text: String,
}

impl App {
    pub async fn call(&self, method: &str, uri: &str, body: Option<Value>, headers: &[(&str, &str)]) -> Reply {
        let mut req = Request::builder().method(method).uri(uri);
        for (k, v) in headers {
            req = req.header(*k, *v);
        }
        let req = match body {
            Some(b) => req
                .header("content-type", "application/json")
                .body(Body::from(b.to_string()))
                .unwrap(),
            None => req.body(Body::empty()).unwrap(),
        };
        let resp = self.router.clone().oneshot(req).await.unwrap();
        let status = resp.status();
        let bytes = axum::body::to_bytes(resp.into_body(), usize::MAX).await.unwrap();
        let text = String::from_utf8(bytes.to_vec()).unwrap();
        let body = serde_json::from_str(&text).unwrap_or(Value::Null);
        Reply { status, body, text }
    }

    pub async fn create(&self, config: Value) -> String {
        let r = self.call("POST", "/experiments", Some(config), &[]).await;
        assert_eq!(r.status, StatusCode::CREATED, "{}", r.text);
        r.body["experiment_id"].as_str().unwrap().to_owned()
    }

    pub async fn register(&self, id: &str, pid: &str, group: Option<u8>) {
        let r = self
            .call(
                "POST",
                &format!("/experiments/{id}/participants"),
                Some(json!({"participant_id": pid, "group": group})),
                &[],
            )
            .await;
        assert!(r.status.is_success(), "{}", r.text);
    }

    pub async fn next(&self, id: &str, pid: &str) -> Value {
        let r = self
            .call("GET", &format!("/experiments/{id}/participants/{pid}/next"), None, &[])
            .await;
        assert_eq!(r.status, StatusCode::OK, "{}", r.text);
        r.body
    }

    pub async fn answer(&self, token: &str, answer: &str) -> Reply {
        self.call(
            "POST",
            &format!("/trials/{token}/answer"),
            Some(json!({"answer": answer, "duration_s": 4.0})),
            &[],
        )
        .await
    }

    /// Serialized session state, for comparing live and recovered sessions.
    pub fn state(&self, id: &str) -> Value {
        let handle = self.registry.get(id).unwrap();
        let exp = bayesadapt_service::store::lock(&handle);
        serde_json::to_value(exp.session().state()).unwrap()
    }
}

/// Small budgets keep tests fast without changing any code path.
pub fn testing_config(items: usize, seed: u64) -> Value {
    json!({
        "mode": "adaptive-testing",
        "item_bank": {"synthetic": items},
        "budget": {"n_outer": 300, "n_inner": 300, "s_util": 50},
        "vi": {"step_count": 150, "learning_rate": 0.05, "mc_samples_per_step": 8, "seed": 0, "warm_steps": 60},
        "termination": {"kind": "rule", "epsilon": 0.01, "min_trials": 1},
        "seed": seed
    })
}

/// Correct for even items, wrong otherwise.
pub fn scripted_answer(next: &Value) -> String {
    let item = next["item_id"].as_u64().unwrap();
    if item % 2 == 0 {
        format!("answer {item}")
    } else {
        "no idea".into()
    }
}

/// Drive one participant to completion, returning the trial count.
pub async fn complete(app: &App, id: &str, pid: &str) -> usize {
    loop {
        let next = app.next(id, pid).await;
        if next["status"] == "finished" {
            return next["trials"].as_u64().unwrap() as usize;
        }
        let r = app.answer(next["token"].as_str().unwrap(), &scripted_answer(&next)).await;
        assert_eq!(r.status, StatusCode::OK, "{}", r.text);
    }
}
