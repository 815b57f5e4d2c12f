#![allow(dead_code)]

use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use propagate_core::classify::{self, Hyperparameters, Imbalance, ModelKind, ModelSpec};
use propagate_core::corpus::{Message, UserRecord};
use propagate_core::features::Extractor;
use propagate_core::simulate::{generate_population, probe_table, PopulationConfig, SyntheticUser};
use propagate_service::{CampaignService, Clock, Dispatcher};
use tower::ServiceExt;

pub const T0: i64 = 1_700_000_000;

pub fn population(n: usize, seed: u64) -> Vec<SyntheticUser> {
    generate_population(&PopulationConfig { n_users: n, seed, request_time: T0, ..Default::default() }).unwrap()
}

/// A small forest trained on a synthetic population, as model-file bytes.
pub fn model_bytes() -> Vec<u8> {
    let users = population(400, 77);
    let table = probe_table(&users, &Extractor::default(), T0, 77).unwrap();
    let spec = ModelSpec {
        kind: ModelKind::RandomForest,
        hyper: Hyperparameters { trees: 20, ..Default::default() },
        imbalance: Imbalance::Weighted { ratio: 10.0 },
        seed: 3,
    };
    classify::train(&spec, &table).unwrap().to_json()
}

/// A hand-made record whose timeline mentions `word`.
pub fn record(id: &str, word: &str) -> UserRecord {
    let mut u = UserRecord {
        user_id: id.into(),
        screen_name: format!("{id}_name"),
        created_at: T0 - 400 * 86_400,
        followers_count: 50,
        friends_count: 20,
        ..Default::default()
    };
    for k in 1..=5 {
        u.timeline.push(Message::from_text(T0 - k * 7_200, format!("talking about {word} today {k}")));
    }
    u.normalize_timeline();
    u
}

pub fn jsonl(users: &[UserRecord]) -> String {
    users.iter().map(|u| serde_json::to_string(u).unwrap() + "\n").collect()
}

pub fn open(dir: &std::path::Path, clock: Arc<dyn Clock>, dispatcher: Arc<dyn Dispatcher>) -> Arc<CampaignService> {
    Arc::new(CampaignService::open(dir, clock, dispatcher).unwrap())
}

pub async fn call(app: &Router, method: &str, uri: &str, body: impl Into<Body>) -> (StatusCode, Vec<u8>) {
    let req = Request::builder().method(method).uri(uri).body(body.into()).unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    (status, resp.into_body().collect().await.unwrap().to_bytes().to_vec())
}

pub fn json(bytes: &[u8]) -> serde_json::Value {
    serde_json::from_slice(bytes).unwrap()
}
