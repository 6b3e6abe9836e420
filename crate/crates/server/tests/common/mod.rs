#![allow(dead_code)]

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::routing::get;
use axum::Router;
use cocoweb_server::{router, AppState, ServiceConfig};
use cocoweb_testkit::MockEnv;
use serde_json::{json, Value};

pub const TRS: &str = "(VAR x) (RULES f(x) -> x)";
pub const SECRET: &str = "let-me-reload";

pub fn fixture(name: &str) -> String {
    std::fs::read_to_string(format!("{}/../../fixtures/problems/{name}", env!("CARGO_MANIFEST_DIR"))).unwrap()
}

async fn spawn_router(app: Router) -> String {
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move { axum::serve(listener, app).await.unwrap() });
    format!("http://{addr}")
}

pub struct Service {
    pub base: String,
    pub state: Arc<AppState>,
    pub env: MockEnv,
    pub http: reqwest::Client,
}

pub async fn start(env: MockEnv, tweak: impl FnOnce(&mut ServiceConfig)) -> Service {
    let mut config = ServiceConfig::new(env.config_root(), env.bin_root());
    config.scratch_dir = env.scratch_dir();
    config.reload_secret = Some(SECRET.to_string());
    tweak(&mut config);
    let state = AppState::new(config).unwrap();
    let base = spawn_router(router(Arc::clone(&state))).await;
    Service { base, state, env, http: reqwest::Client::new() }
}

impl Service {
    pub fn url(&self, path: &str) -> String {
        format!("{}{path}", self.base)
    }

    pub async fn get(&self, path: &str) -> (StatusCode, Value) {
        let r = self.http.get(self.url(path)).send().await.unwrap();
        let status = StatusCode::from_u16(r.status().as_u16()).unwrap();
        (status, r.json().await.unwrap_or(Value::Null))
    }

    pub async fn post(&self, path: &str, body: Value) -> (StatusCode, Value) {
        let r = self.http.post(self.url(path)).json(&body).send().await.unwrap();
        let status = StatusCode::from_u16(r.status().as_u16()).unwrap();
        (status, r.json().await.unwrap_or(Value::Null))
    }

    pub async fn reload(&self, secret: Option<&str>) -> (StatusCode, Value) {
        let mut req = self.http.post(self.url("/api/registry/reload"));
        if let Some(s) = secret {
            req = req.header("x-reload-secret", s);
        }
        let r = req.send().await.unwrap();
        let status = StatusCode::from_u16(r.status().as_u16()).unwrap();
        (status, r.json().await.unwrap_or(Value::Null))
    }

    pub async fn submit_inline(&self, text: &str, tools: &[&str]) -> (StatusCode, Value) {
        self.post("/api/jobs", json!({"problem_source": {"type": "inline", "text": text}, "tool_ids": tools}))
            .await
    }

    /// Polls until DONE, returning every document seen along the way.
    pub async fn poll_done(&self, id: &str, limit: Duration) -> Vec<Value> {
        let start = Instant::now();
        let mut seen = Vec::new();
        loop {
            let (status, doc) = self.get(&format!("/api/jobs/{id}")).await;
            assert_eq!(status, StatusCode::OK, "{doc}");
            let done = doc["state"]["status"] == "DONE";
            seen.push(doc);
            if done {
                return seen;
            }
            assert!(start.elapsed() < limit, "job {id} not done after {limit:?}: {:?}", seen.last());
            tokio::time::sleep(Duration::from_millis(50)).await;
        }
    }
}

/// A stand-in for the problem database serving `/cops/<n>.trs`.
pub struct CopsStub {
    pub base: String,
    pub hits: Arc<AtomicUsize>,
}

#[derive(Clone)]
struct StubState {
    hits: Arc<AtomicUsize>,
    delay: Duration,
    problems: Arc<Vec<(u64, String)>>,
}

async fn stub_problem(State(s): State<StubState>, Path(file): Path<String>) -> (StatusCode, String) {
    s.hits.fetch_add(1, Ordering::SeqCst);
    tokio::time::sleep(s.delay).await;
    let number: Option<u64> = file.strip_suffix(".trs").and_then(|n| n.parse().ok());
    match s.problems.iter().find(|(n, _)| Some(*n) == number) {
        Some((_, text)) => (StatusCode::OK, text.clone()),
        None => (StatusCode::NOT_FOUND, "no such problem".into()),
    }
}

impl CopsStub {
    pub async fn start(problems: Vec<(u64, String)>, delay: Duration) -> Self {
        let hits = Arc::new(AtomicUsize::new(0));
        let state = StubState { hits: Arc::clone(&hits), delay, problems: Arc::new(problems) };
        let app = Router::new().route("/cops/{file}", get(stub_problem)).with_state(state);
        CopsStub { base: spawn_router(app).await, hits }
    }

    pub fn hits(&self) -> usize {
        self.hits.load(Ordering::SeqCst)
    }

    pub fn configure(&self, config: &mut ServiceConfig) {
        config.cops_base_url = self.base.clone();
        config.cops_path_template = "/cops/{number}.trs".to_string();
    }
}
