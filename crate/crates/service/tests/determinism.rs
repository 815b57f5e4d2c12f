mod common;

use std::sync::Arc;

use axum::http::StatusCode;
use common::*;
use propagate_service::http::router;
use propagate_service::{LogOnly, ManualClock, SimulatorOracle};
use serde_json::json;

/// Drives a campaign through ingestion, dispatches and observations.
async fn populate(app: &axum::Router, clock: &ManualClock) -> String {
    let (_, body) = call(app, "POST", "/models", model_bytes()).await;
    let model_id = json(&body)["id"].as_str().unwrap().to_string();
    let def = json!({"topics": ["flu", "alert", "safety"], "template": "{user} please RT", "model_id": model_id, "top_n": 20});
    let (_, body) = call(app, "POST", "/campaigns", def.to_string()).await;
    let id = json(&body)["id"].as_str().unwrap().to_string();
    let users = population(300, 8);
    let records: Vec<_> = users.iter().map(|u| u.record.clone()).collect();
    call(app, "POST", &format!("/campaigns/{id}/candidates"), jsonl(&records)).await;
    for round in 0..3 {
        clock.advance(600);
        let (_, body) = call(app, "GET", &format!("/campaigns/{id}/recommendations"), "").await;
        let recs = json(&body);
        for c in recs.as_array().unwrap().iter().take(4) {
            let user_id = c["user_id"].as_str().unwrap();
            let (status, _) =
                call(app, "POST", &format!("/campaigns/{id}/dispatch"), json!({"user_id": user_id}).to_string()).await;
            assert_eq!(status, StatusCode::CREATED);
            if round == 0 {
                let obs = json!({"user_id": user_id, "observed_at": clock_now(clock) + 5_000});
                call(app, "POST", &format!("/campaigns/{id}/observations"), obs.to_string()).await;
            }
        }
    }
    id
}

fn clock_now(clock: &ManualClock) -> i64 {
    use propagate_service::Clock;
    clock.now()
}

async fn reads(app: &axum::Router, id: &str) -> (Vec<u8>, Vec<u8>) {
    let (s1, recs) = call(app, "GET", &format!("/campaigns/{id}/recommendations"), "").await;
    let (s2, metrics) = call(app, "GET", &format!("/campaigns/{id}/metrics"), "").await;
    assert_eq!((s1, s2), (StatusCode::OK, StatusCode::OK));
    (recs, metrics)
}

#[tokio::test]
async fn restart_replays_byte_identically() {
    let dir = tempfile::tempdir().unwrap();
    let clock = Arc::new(ManualClock::new(T0));
    let app = router(open(dir.path(), clock.clone(), Arc::new(LogOnly)));
    let id = populate(&app, &clock).await;
    let before = reads(&app, &id).await;
    assert!(json(&before.1)["contacted"].as_u64().unwrap() > 0);
    drop(app);

    let reopened = router(open(dir.path(), clock.clone(), Arc::new(LogOnly)));
    assert_eq!(reads(&reopened, &id).await, before);

    // A copy of the logs elsewhere replays to the same answers.
    let copy = tempfile::tempdir().unwrap();
    for sub in ["campaigns", "models"] {
        std::fs::create_dir_all(copy.path().join(sub)).unwrap();
        for entry in std::fs::read_dir(dir.path().join(sub)).unwrap() {
            let p = entry.unwrap().path();
            std::fs::copy(&p, copy.path().join(sub).join(p.file_name().unwrap())).unwrap();
        }
    }
    let copied = router(open(copy.path(), clock.clone(), Arc::new(LogOnly)));
    assert_eq!(reads(&copied, &id).await, before);

    // New campaigns continue the id sequence.
    let (_, body) = call(&reopened, "GET", &format!("/campaigns/{id}"), "").await;
    let def = json(&body)["definition"].clone();
    let (_, body) = call(&reopened, "POST", "/campaigns", def.to_string()).await;
    assert_eq!(json(&body)["id"], "cmp-000002");
}

#[tokio::test]
async fn pending_simulated_retweets_survive_restart() {
    let users = population(300, 8);
    let dir = tempfile::tempdir().unwrap();
    let clock = Arc::new(ManualClock::new(T0));
    let service = open(dir.path(), clock.clone(), Arc::new(SimulatorOracle::new(&users, 2)));
    let app = router(service.clone());
    let id = populate(&app, &clock).await;
    drop(app);
    drop(service);
    let reopened = open(dir.path(), clock.clone(), Arc::new(SimulatorOracle::new(&users, 2)));
    clock.advance(1_000 * 86_400);
    reopened.flush_due().unwrap();
    let m = reopened.metrics(&id).unwrap();

    // Same run without the restart.
    let dir2 = tempfile::tempdir().unwrap();
    let clock2 = Arc::new(ManualClock::new(T0));
    let straight = open(dir2.path(), clock2.clone(), Arc::new(SimulatorOracle::new(&users, 2)));
    let app2 = router(straight.clone());
    let id2 = populate(&app2, &clock2).await;
    clock2.advance(1_000 * 86_400);
    straight.flush_due().unwrap();
    assert_eq!(serde_json::to_vec(&m).unwrap(), serde_json::to_vec(&straight.metrics(&id2).unwrap()).unwrap());
}

#[tokio::test(flavor = "multi_thread", worker_threads = 8)]
async fn concurrent_duplicate_dispatch_succeeds_once() {
    let dir = tempfile::tempdir().unwrap();
    let clock = Arc::new(ManualClock::new(T0));
    let app = router(open(dir.path(), clock.clone(), Arc::new(LogOnly)));
    let (_, body) = call(&app, "POST", "/models", model_bytes()).await;
    let model_id = json(&body)["id"].as_str().unwrap().to_string();
    let def = json!({"topics": ["flu"], "template": "{user} please RT", "model_id": model_id});
    let (_, body) = call(&app, "POST", "/campaigns", def.to_string()).await;
    let id = json(&body)["id"].as_str().unwrap().to_string();
    call(&app, "POST", &format!("/campaigns/{id}/candidates"), jsonl(&[record("target", "flu")])).await;

    let tasks: Vec<_> = (0..100)
        .map(|_| {
            let app = app.clone();
            let uri = format!("/campaigns/{id}/dispatch");
            tokio::spawn(async move { call(&app, "POST", &uri, json!({"user_id": "target"}).to_string()).await })
        })
        .collect();
    let mut created = 0;
    let mut conflicts = 0;
    for t in tasks {
        let (status, body) = t.await.unwrap();
        match status {
            StatusCode::CREATED => created += 1,
            StatusCode::CONFLICT => {
                assert_eq!(json(&body)["code"], "AlreadyDispatched");
                conflicts += 1;
            }
            other => panic!("unexpected status {other}"),
        }
    }
    assert_eq!((created, conflicts), (1, 99));
    let log = std::fs::read_to_string(dir.path().join("campaigns").join(format!("{id}.jsonl"))).unwrap();
    assert_eq!(log.lines().filter(|l| l.contains("\"dispatched\"")).count(), 1);
}
