mod common;

use std::time::Duration;

use adforge::classifier::{ClassifierError, RemoteScorer};
use adforge::generator::{ChatClient, EndpointConfig, GenError};
use adforge::{GenerationRequest, Generator};
use common::{Reply, StubServer};
use serde_json::{json, Value};

fn choices(n: usize) -> String {
    let choices: Vec<Value> = (0..n)
        .map(|i| json!({"index": i, "message": {"role": "assistant", "content": format!("reply {i}")}, "finish_reason": "stop"}))
        .collect();
    json!({ "choices": choices }).to_string()
}

#[test]
fn remote_scorer_reads_probability() {
    let server = StubServer::start(|body| {
        let v: Value = serde_json::from_str(body).unwrap();
        assert_eq!(v["query"], "q");
        assert_eq!(v["response"], "r");
        Reply::ok(r#"{"probability": 0.25}"#)
    });
    let scorer = RemoteScorer::new(&server.url).unwrap();
    assert_eq!(scorer.score("q", "r").unwrap(), 0.25);
}

#[test]
fn remote_scorer_rejects_out_of_range() {
    let server = StubServer::start(|_| Reply::ok(r#"{"probability": 1.5}"#));
    let err = RemoteScorer::new(&server.url).unwrap().score("q", "r").unwrap_err();
    assert!(matches!(err, ClassifierError::Protocol(_)), "{err:?}");
}

#[test]
fn remote_scorer_rejects_missing_field() {
    let server = StubServer::start(|_| Reply::ok(r#"{"score": 0.2}"#));
    let err = RemoteScorer::new(&server.url).unwrap().score("q", "r").unwrap_err();
    assert!(matches!(err, ClassifierError::Protocol(_)), "{err:?}");
}

#[test]
fn remote_scorer_times_out() {
    let server = StubServer::start(|_| Reply::ok(r#"{"probability": 0.1}"#).delayed(Duration::from_millis(800)));
    let scorer = RemoteScorer::with_timeout(&server.url, Duration::from_millis(100)).unwrap();
    assert!(matches!(scorer.score("q", "r").unwrap_err(), ClassifierError::Timeout));
}

#[test]
fn chat_client_returns_n_candidates_in_one_call() {
    let server = StubServer::start(|body| {
        let v: Value = serde_json::from_str(body).unwrap();
        Reply::ok(choices(v["n"].as_u64().unwrap() as usize))
    });
    let client = ChatClient::new(EndpointConfig::new(&server.url, "m")).unwrap();
    let out = client.generate(&GenerationRequest::new("p", 1.0, 3)).unwrap();
    assert_eq!(out.len(), 3);
    assert_eq!(out[2].text, "reply 2");
    assert_eq!(server.calls(), 1);
}

#[test]
fn chat_client_fans_out_when_provider_caps_n() {
    let server = StubServer::start(|_| Reply::ok(choices(1)));
    let client = ChatClient::new(EndpointConfig::new(&server.url, "m")).unwrap();
    let out = client.generate(&GenerationRequest::new("p", 1.0, 4)).unwrap();
    assert_eq!(out.len(), 4);
    assert_eq!(out.iter().map(|c| c.index).collect::<Vec<_>>(), vec![0, 1, 2, 3]);
    assert_eq!(server.calls(), 4);
}

#[test]
fn chat_client_surfaces_http_errors() {
    let server = StubServer::start(|_| Reply::status(500, "boom"));
    let client = ChatClient::new(EndpointConfig::new(&server.url, "m")).unwrap();
    match client.generate(&GenerationRequest::new("p", 1.0, 2)).unwrap_err() {
        GenError::Api { status, body } => {
            assert_eq!(status, 500);
            assert_eq!(body, "boom");
        }
        other => panic!("unexpected {other:?}"),
    }
}
