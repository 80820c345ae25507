use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use isu_dialog::service::{Deployment, SessionManager};
use isu_dialog_cli::router;

fn app(dir: Option<std::path::PathBuf>, max: usize) -> axum::Router {
    router(Arc::new(SessionManager::new(Arc::new(Deployment::desk()), dir, max)))
}

async fn call(app: &axum::Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder().method(method).uri(uri).header("content-type", "application/json");
    let req = req.body(body.map_or(Body::empty(), |b| Body::from(b.to_string()))).unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let v = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap() };
    (status, v)
}

fn kinds(v: &Value) -> Vec<String> {
    v["acts"].as_array().unwrap().iter().map(|a| a["kind"].as_str().unwrap().to_string()).collect()
}

#[tokio::test]
async fn session_lifecycle() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(Some(dir.path().to_path_buf()), 8);
    let (st, created) = call(&app, "POST", "/sessions", None).await;
    assert_eq!(st, StatusCode::CREATED);
    assert_eq!(kinds(&created["turn"]), ["Greet"]);
    let id = created["session_id"].as_str().unwrap().to_string();

    let (st, other) = call(&app, "POST", "/sessions", None).await;
    assert_eq!(st, StatusCode::CREATED);
    assert_ne!(other["session_id"], created["session_id"]);

    let text = json!({"text": "Hello, I would like to know if there are documents about asthma"});
    let (st, reply) = call(&app, "POST", &format!("/sessions/{id}/utterances"), Some(text)).await;
    assert_eq!(st, StatusCode::OK);
    assert_eq!(kinds(&reply)[0], "Acknowledge");
    assert!(!kinds(&reply).contains(&"Ask".to_string()));
    let snap = reply["public_snapshot"].as_object().unwrap();
    let mut keys: Vec<&String> = snap.keys().collect();
    keys.sort();
    assert_eq!(keys, ["action", "com", "issue", "qud"]);

    let (st, state) = call(&app, "GET", &format!("/sessions/{id}/state"), None).await;
    assert_eq!(st, StatusCode::OK);
    assert_eq!(state["qud"], state["issue"].as_array().unwrap().last().cloned().unwrap_or(Value::Null));

    let (st, _) = call(&app, "POST", &format!("/sessions/{id}/utterances"), Some(json!({"text": "  "}))).await;
    assert_eq!(st, StatusCode::UNPROCESSABLE_ENTITY);

    let (st, bye) = call(&app, "POST", &format!("/sessions/{id}/utterances"), Some(json!({"text": "Bye"}))).await;
    assert_eq!(st, StatusCode::OK);
    assert_eq!(kinds(&bye), ["Bye"]);
    assert_eq!(bye["ended"], true);
    let (st, _) = call(&app, "POST", &format!("/sessions/{id}/utterances"), Some(json!({"text": "Hello"}))).await;
    assert_eq!(st, StatusCode::CONFLICT);

    let (st, tr) = call(&app, "GET", &format!("/sessions/{id}/transcript"), None).await;
    assert_eq!(st, StatusCode::OK);
    let turns = tr.as_array().unwrap();
    assert_eq!(turns.len(), 5);
    for (i, t) in turns.iter().enumerate() {
        assert_eq!(t["index"], i);
    }
    let file = std::fs::read_to_string(dir.path().join(format!("{id}.jsonl"))).unwrap();
    let lines: Vec<Value> = file.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(&lines, turns);

    let (st, _) = call(&app, "DELETE", &format!("/sessions/{id}"), None).await;
    assert_eq!(st, StatusCode::NO_CONTENT);
    let (st, _) = call(&app, "GET", &format!("/sessions/{id}/state"), None).await;
    assert_eq!(st, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn unknown_session_is_not_found() {
    let app = app(None, 8);
    let (st, body) = call(&app, "POST", "/sessions/nope/utterances", Some(json!({"text": "hi"}))).await;
    assert_eq!(st, StatusCode::NOT_FOUND);
    assert!(body["error"].as_str().unwrap().contains("nope"));
}

#[tokio::test]
async fn capacity_is_refused_with_retry_hint() {
    let app = app(None, 1);
    assert_eq!(call(&app, "POST", "/sessions", None).await.0, StatusCode::CREATED);
    let req = Request::builder().method("POST").uri("/sessions").body(Body::empty()).unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    assert_eq!(resp.status(), StatusCode::SERVICE_UNAVAILABLE);
    assert!(resp.headers().contains_key("retry-after"));
}

#[tokio::test]
async fn concurrent_posts_to_one_session_are_serialized() {
    let manager = Arc::new(SessionManager::new(Arc::new(Deployment::desk()), None, 8));
    let (id, _) = manager.create().unwrap();
    let mut handles = Vec::new();
    for i in 0..8 {
        let m = manager.clone();
        let id = id.clone();
        handles.push(std::thread::spawn(move || m.post(&id, if i % 2 == 0 { "asthma" } else { "No" })));
    }
    for h in handles {
        let _ = h.join().unwrap();
    }
    let tr = manager.transcript(&id).unwrap();
    for (i, t) in tr.iter().enumerate() {
        assert_eq!(t.index, i);
    }
    // User and system turns alternate after the opening turn.
    for pair in tr[1..].chunks(2) {
        assert_eq!(pair.len(), 2);
        assert_ne!(pair[0].speaker, pair[1].speaker);
    }
}
