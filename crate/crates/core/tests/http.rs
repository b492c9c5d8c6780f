mod common;

use std::time::Duration;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use base64::Engine;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use noughts::service::{router, AppState};

fn app() -> (AppState, Router) {
    let state = AppState::new(common::scripted_models());
    (state.clone(), router(state))
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(b) => req
            .header("content-type", "application/json")
            .body(Body::from(b.to_string()))
            .unwrap(),
        None => req.body(Body::empty()).unwrap(),
    };
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let value = serde_json::from_slice(&bytes).unwrap_or(Value::Null);
    (status, value)
}

async fn create(app: &Router) -> (String, Value) {
    let (status, body) = call(app, "POST", "/sessions", None).await;
    assert_eq!(status, StatusCode::CREATED);
    (body["session_id"].as_str().unwrap().to_string(), body)
}

fn pixels(level: u8) -> String {
    base64::engine::general_purpose::STANDARD.encode(common::flat_raster(level))
}

/// Talks until the board shows the user to move.
async fn to_user_move(app: &Router, id: &str) -> Value {
    for _ in 0..10 {
        let (_, snap) = call(app, "GET", &format!("/sessions/{id}"), None).await;
        if snap["board"].as_str().unwrap().ends_with('u') {
            return snap;
        }
        let (status, _) = call(
            app,
            "POST",
            &format!("/sessions/{id}/utterance"),
            Some(json!({"text": "yes let's play"})),
        )
        .await;
        assert_eq!(status, StatusCode::OK);
    }
    panic!("agent never moved");
}

#[tokio::test]
async fn sessions_are_created_with_distinct_ids() {
    let (state, app) = app();
    let (a, body) = create(&app).await;
    let (b, _) = create(&app).await;
    assert_ne!(a, b);
    assert_eq!(a.len(), 32);
    assert!(a.chars().all(|c| c.is_ascii_hexdigit()));
    assert_eq!(body["events"][0]["seq"], 1);
    assert_eq!(body["events"][0]["kind"], "agent_utterance");
    assert_eq!(state.session_count(), 2);

    let (status, snap) = call(&app, "GET", &format!("/sessions/{a}"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(snap["session_id"], a.as_str());
    assert_eq!(snap["board"].as_str().unwrap().len(), 10);
    assert!(snap["transcript_len"].as_u64().unwrap() >= 1);
}

#[tokio::test]
async fn unknown_sessions_are_404() {
    let (_, app) = app();
    let (status, body) = call(&app, "GET", "/sessions/feed", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert!(body["error"].as_str().unwrap().contains("feed"));
    let (status, _) = call(
        &app,
        "POST",
        "/sessions/feed/utterance",
        Some(json!({"text": "hi"})),
    )
    .await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let (status, _) = call(&app, "GET", "/health", None).await;
    assert_eq!(status, StatusCode::OK);
}

#[tokio::test]
async fn malformed_rasters_are_400() {
    let (_, app) = app();
    let (id, _) = create(&app).await;
    let uri = format!("/sessions/{id}/raster");
    let (status, _) = call(
        &app,
        "POST",
        &uri,
        Some(json!({"cell": 0, "pixels": "not base64!"})),
    )
    .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let short = base64::engine::general_purpose::STANDARD.encode([0u8; 10]);
    let (status, body) = call(&app, "POST", &uri, Some(json!({"cell": 0, "pixels": short}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert!(body["error"].as_str().unwrap().contains("1600"));
    to_user_move(&app, &id).await;
    let (status, _) = call(&app, "POST", &uri, Some(json!({"cell": 9, "pixels": pixels(0)}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, _) = call(&app, "POST", &uri, Some(json!({"cell": 0}))).await;
    assert!(status.is_client_error());
}

#[tokio::test]
async fn three_ticks_commit_over_http() {
    let (_, app) = app();
    let (id, _) = create(&app).await;
    let snap = to_user_move(&app, &id).await;
    let board = snap["board"].as_str().unwrap().to_string();
    let cell = board.find('.').unwrap();
    let uri = format!("/sessions/{id}/raster");
    for _ in 0..2 {
        let (status, ack) = call(
            &app,
            "POST",
            &uri,
            Some(json!({"cell": cell, "pixels": pixels(230)})),
        )
        .await;
        assert_eq!(status, StatusCode::OK);
        assert_eq!(ack["committed"], false);
    }
    let (_, ack) = call(
        &app,
        "POST",
        &uri,
        Some(json!({"cell": cell, "pixels": pixels(230)})),
    )
    .await;
    assert_eq!(ack["committed"], true);
    assert_eq!(ack["events"][0]["kind"], "user_move");
    assert_eq!(ack["events"][0]["payload"]["cell"], cell);
    let (_, snap) = call(&app, "GET", &format!("/sessions/{id}"), None).await;
    assert_eq!(&snap["board"].as_str().unwrap()[cell..cell + 1], "x");
    // Re-submitting the committed drawing is a no-op.
    let (status, ack) = call(
        &app,
        "POST",
        &uri,
        Some(json!({"cell": cell, "pixels": pixels(230)})),
    )
    .await;
    if status == StatusCode::OK {
        assert_eq!(ack["committed"], false);
        assert!(ack["events"].as_array().unwrap().is_empty());
    } else {
        assert_eq!(status, StatusCode::CONFLICT);
    }
}

#[tokio::test]
async fn utterances_are_clamped_and_empty_ones_noted() {
    let (_, app) = app();
    let (id, _) = create(&app).await;
    let uri = format!("/sessions/{id}/utterance");
    let (status, body) = call(
        &app,
        "POST",
        &uri,
        Some(json!({"text": "sure", "confidence": 3.5})),
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    let ev = &body["events"][0];
    assert_eq!(ev["kind"], "user_utterance");
    assert_eq!(ev["payload"]["confidences"][0], 1.0);
    let (_, body) = call(&app, "POST", &uri, Some(json!({"text": "   "}))).await;
    assert_eq!(body["events"][0]["kind"], "notice");
}

/// Reads SSE frames until `n` events have arrived.
async fn read_events(body: &mut Body, n: usize) -> Vec<Value> {
    let mut out = Vec::new();
    let mut buf = String::new();
    while out.len() < n {
        let frame = tokio::time::timeout(Duration::from_secs(5), body.frame())
            .await
            .expect("event arrives")
            .unwrap()
            .unwrap();
        if let Ok(data) = frame.into_data() {
            buf.push_str(std::str::from_utf8(&data).unwrap());
        }
        while let Some(end) = buf.find("\n\n") {
            let block: String = buf.drain(..end + 2).collect();
            for line in block.lines() {
                if let Some(d) = line.strip_prefix("data:") {
                    out.push(serde_json::from_str(d.trim()).unwrap());
                }
            }
        }
    }
    out
}

#[tokio::test]
async fn event_stream_resumes_without_duplicates() {
    let (_, app) = app();
    let (id, created) = create(&app).await;
    let opening = created["events"].as_array().unwrap().len() as u64;
    assert!(opening >= 2);
    let resp = app
        .clone()
        .oneshot(
            Request::builder()
                .uri(format!("/sessions/{id}/events?from=1"))
                .body(Body::empty())
                .unwrap(),
        )
        .await
        .unwrap();
    assert_eq!(resp.status(), StatusCode::OK);
    assert_eq!(resp.headers()["content-type"], "text/event-stream");
    let mut body = resp.into_body();
    let backlog = read_events(&mut body, opening as usize - 1).await;
    let seqs: Vec<u64> = backlog.iter().map(|e| e["seq"].as_u64().unwrap()).collect();
    assert_eq!(seqs, (2..=opening).collect::<Vec<_>>());

    let (_, posted) = call(
        &app,
        "POST",
        &format!("/sessions/{id}/utterance"),
        Some(json!({"text": "hello"})),
    )
    .await;
    let posted = posted["events"].as_array().unwrap().clone();
    let live = read_events(&mut body, posted.len()).await;
    assert_eq!(live, posted);
    assert_eq!(live[0]["seq"], opening + 1);
}

#[tokio::test]
async fn sessions_do_not_share_events() {
    let (_, app) = app();
    let (a, _) = create(&app).await;
    let (b, _) = create(&app).await;
    let (_, before) = call(&app, "GET", &format!("/sessions/{b}"), None).await;
    call(
        &app,
        "POST",
        &format!("/sessions/{a}/utterance"),
        Some(json!({"text": "hello"})),
    )
    .await;
    let (_, after) = call(&app, "GET", &format!("/sessions/{b}"), None).await;
    assert_eq!(before, after);
}

#[tokio::test]
async fn idle_sessions_expire_and_delete_works() {
    let state = AppState::with_ttl(common::scripted_models(), Duration::ZERO);
    let app = router(state.clone());
    create(&app).await;
    assert_eq!(state.sweep(), 1);
    assert_eq!(state.session_count(), 0);

    let (state, app) = self::app();
    let (id, _) = create(&app).await;
    assert_eq!(state.sweep(), 0);
    let (status, _) = call(&app, "DELETE", &format!("/sessions/{id}"), None).await;
    assert_eq!(status, StatusCode::NO_CONTENT);
    let (status, _) = call(&app, "GET", &format!("/sessions/{id}"), None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}
