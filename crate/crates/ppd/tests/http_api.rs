mod common;

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::routing::post;
use axum::{Json, Router};
use common::{demo_checkpoint, demo_service, scripted_conversation, SCRIPT};
use http_body_util::BodyExt;
use ppd::http::router;
use ppd::remote::{RemoteBackend, RemoteConfig};
use ppd::service::{ApiMessage, CreatedSession, ScreeningService, ServiceConfig};
use ppd_core::dialogue::{ChatBackend, ChatRequest, MockBackend, PromptId, Utterance};
use serde_json::Value;
use tower::ServiceExt;

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder().method(method).uri(uri).header("content-type", "application/json");
    let req = match body {
        Some(b) => req.body(Body::from(b.to_string())).unwrap(),
        None => req.body(Body::empty()).unwrap(),
    };
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let json = serde_json::from_slice(&bytes).unwrap_or_else(|_| Value::String(String::from_utf8_lossy(&bytes).into()));
    (status, json)
}

fn app(svc: ScreeningService) -> Router {
    router(Arc::new(svc))
}

#[tokio::test]
async fn no_checkpoint_is_503() {
    let app = app(ScreeningService::new(None, Box::new(MockBackend::default()), ServiceConfig::default()));
    let (s, body) = call(&app, "GET", "/health", None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(body["model_loaded"], false);
    let (s, body) = call(&app, "POST", "/sessions", None).await;
    assert_eq!(s, StatusCode::SERVICE_UNAVAILABLE);
    assert!(body["error"].as_str().unwrap().contains("checkpoint"));
}

#[tokio::test]
async fn sessions_get_distinct_ids_and_a_greeting() {
    let app = app(demo_service());
    let (s, a) = call(&app, "POST", "/sessions", None).await;
    assert_eq!(s, StatusCode::CREATED);
    let (_, b) = call(&app, "POST", "/sessions", None).await;
    assert_ne!(a["session_id"], b["session_id"]);
    assert_eq!(a["messages"][0]["role"], "assistant");
    assert_eq!(a["messages"][0]["text"], ppd_core::dialogue::prompts::AGE_QUESTION);
}

#[tokio::test]
async fn error_statuses() {
    let app = app(demo_service());
    let (s, _) = call(&app, "POST", "/sessions/nope/messages", Some(serde_json::json!({"text": "hi"}))).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    let (_, created) = call(&app, "POST", "/sessions", None).await;
    let id = created["session_id"].as_str().unwrap().to_string();
    let uri = format!("/sessions/{id}/messages");

    let (s, body) = call(&app, "POST", &uri, Some(serde_json::json!({"text": "   "}))).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(body["messages"][0]["text"], ppd_core::dialogue::prompts::EMPTY_REPROMPT);

    let (s, _) = call(&app, "POST", &uri, Some(serde_json::json!({"wrong": 1}))).await;
    assert!(s.is_client_error());

    let mut last = Value::Null;
    for line in SCRIPT {
        let (s, body) = call(&app, "POST", &uri, Some(serde_json::json!({ "text": line }))).await;
        assert_eq!(s, StatusCode::OK);
        last = body;
    }
    let msgs = last["messages"].as_array().unwrap();
    let assessment = msgs.iter().find(|m| m.get("assessment").is_some()).unwrap();
    assert_eq!(assessment["assessment"]["recommendations"].as_array().unwrap().len(), 3);

    let (s, _) = call(&app, "POST", &uri, Some(serde_json::json!({"text": "one more"}))).await;
    assert_eq!(s, StatusCode::CONFLICT);
    let (s, view) = call(&app, "GET", &format!("/sessions/{id}"), None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(view["state"], "done");

    let (s, _) = call(&app, "POST", &format!("/sessions/{id}/feedback"), Some(serde_json::json!({"label": true}))).await;
    assert_eq!(s, StatusCode::FORBIDDEN);
}

#[tokio::test]
async fn http_matches_direct_calls() {
    let (direct, replies) = scripted_conversation(&demo_service());
    let app = app(demo_service());
    let (_, created) = call(&app, "POST", "/sessions", None).await;
    let created: CreatedSession = serde_json::from_value(created).unwrap();
    let mut text = String::new();
    common::render_messages(&mut text, &created.messages);
    for (line, expected) in SCRIPT.iter().zip(&replies) {
        text.push_str(&format!("[user]\n{line}\n"));
        let (_, body) = call(&app, "POST", &format!("/sessions/{}/messages", created.session_id), Some(serde_json::json!({ "text": line }))).await;
        let got: Vec<ApiMessage> = serde_json::from_value(body["messages"].clone()).unwrap();
        assert_eq!(&got, expected);
        common::render_messages(&mut text, &got);
    }
    assert_eq!(text, direct);
}

#[tokio::test]
async fn feedback_trains_the_live_model() {
    let config = ServiceConfig { learn_from_feedback: true, ..ServiceConfig::default() };
    let svc = Arc::new(ScreeningService::new(Some(demo_checkpoint()), Box::new(MockBackend::default()), config));
    let app = router(svc.clone());
    let (_, created) = call(&app, "POST", "/sessions", None).await;
    let id = created["session_id"].as_str().unwrap().to_string();
    let (s, _) = call(&app, "POST", &format!("/sessions/{id}/feedback"), Some(serde_json::json!({"label": true}))).await;
    assert_eq!(s, StatusCode::CONFLICT);
    for line in SCRIPT {
        call(&app, "POST", &format!("/sessions/{id}/messages"), Some(serde_json::json!({ "text": line }))).await;
    }
    let before = svc.model().unwrap().trained_samples;
    let (s, _) = call(&app, "POST", &format!("/sessions/{id}/feedback"), Some(serde_json::json!({"label": false}))).await;
    assert_eq!(s, StatusCode::NO_CONTENT);
    assert_eq!(svc.model().unwrap().trained_samples, before + 1);
    let (s, _) = call(&app, "POST", &format!("/sessions/{id}/feedback"), Some(serde_json::json!({"label": false}))).await;
    assert_eq!(s, StatusCode::CONFLICT);
}

/// Local stand-in for a chat-completion endpoint: fails the first request
/// with a 500, then echoes the temperature and the last user turn.
fn spawn_fake_endpoint(fail_first: usize) -> (String, Arc<AtomicUsize>) {
    let hits = Arc::new(AtomicUsize::new(0));
    let counter = hits.clone();
    let (tx, rx) = std::sync::mpsc::channel();
    std::thread::spawn(move || {
        let rt = tokio::runtime::Runtime::new().unwrap();
        rt.block_on(async move {
            let app = Router::new().route(
                "/v1/chat/completions",
                post(move |Json(body): Json<Value>| {
                    let counter = counter.clone();
                    async move {
                        let n = counter.fetch_add(1, Ordering::SeqCst);
                        if n < fail_first {
                            return (StatusCode::INTERNAL_SERVER_ERROR, Json(serde_json::json!({})));
                        }
                        let msgs = body["messages"].as_array().unwrap();
                        let content = format!(
                            "{}|{}|{}|{}",
                            body["model"].as_str().unwrap(),
                            body["temperature"],
                            msgs[0]["role"].as_str().unwrap(),
                            msgs.last().unwrap()["content"].as_str().unwrap()
                        );
                        (StatusCode::OK, Json(serde_json::json!({"choices": [{"message": {"role": "assistant", "content": content}}]})))
                    }
                }),
            );
            let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
            tx.send(listener.local_addr().unwrap()).unwrap();
            axum::serve(listener, app).await.unwrap();
        });
    });
    let addr = rx.recv().unwrap();
    (format!("http://{addr}/v1"), hits)
}

fn remote(base_url: String, retries: u32) -> RemoteBackend {
    RemoteBackend::new(RemoteConfig {
        base_url,
        model: "test-model".into(),
        api_key: Some("k".into()),
        timeout: std::time::Duration::from_secs(5),
        retries,
    })
    .unwrap()
}

fn request() -> ChatRequest {
    ChatRequest {
        prompt: PromptId::Interpretation,
        system: "sys".into(),
        history: vec![Utterance::assistant("q"), Utterance::user("I sleep badly")],
        temperature: 0.0,
    }
}

#[test]
fn remote_backend_retries_once() {
    let (url, hits) = spawn_fake_endpoint(1);
    let reply = remote(url, 1).complete(&request()).unwrap();
    assert_eq!(reply, "test-model|0.0|system|I sleep badly");
    assert_eq!(hits.load(Ordering::SeqCst), 2);
}

#[test]
fn remote_backend_gives_up_after_the_retry() {
    let (url, hits) = spawn_fake_endpoint(5);
    assert!(remote(url, 1).complete(&request()).is_err());
    assert_eq!(hits.load(Ordering::SeqCst), 2);
}

#[test]
fn unreachable_remote_falls_back_in_session() {
    let backend = remote("http://127.0.0.1:9/v1".into(), 0);
    let mut s = ppd_core::dialogue::DialogueSession::new("x");
    s.start();
    let turn = s.handle_user_message("I'm 30", &backend).unwrap();
    assert_eq!(
        turn.kind,
        ppd_core::dialogue::TurnKind::Question { topic: ppd_core::record::Topic::BabyBondingIssues, fallback: true }
    );
}
