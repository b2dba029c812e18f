//! Client for classifiers served over HTTP.
//!
//! Wire protocol: `POST {endpoint}` with `{"query": .., "response": ..}`,
//! answered by `{"probability": p}` where `p` lies in `[0, 1]`.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{ClassifierError, Scorer};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);

#[derive(Serialize)]
struct ScoreRequest<'a> {
    query: &'a str,
    response: &'a str,
}

#[derive(Deserialize)]
struct ScoreReply {
    probability: Option<serde_json::Value>,
}

#[derive(Debug, Clone)]
pub struct RemoteScorer {
    endpoint: String,
    client: reqwest::blocking::Client,
}

impl RemoteScorer {
    pub fn new(endpoint: impl Into<String>) -> Result<Self, ClassifierError> {
        Self::with_timeout(endpoint, DEFAULT_TIMEOUT)
    }

    pub fn with_timeout(endpoint: impl Into<String>, timeout: Duration) -> Result<Self, ClassifierError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| ClassifierError::Network(e.to_string()))?;
        Ok(Self {
            endpoint: endpoint.into(),
            client,
        })
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    pub fn score(&self, query: &str, response: &str) -> Result<f64, ClassifierError> {
        let reply = self
            .client
            .post(&self.endpoint)
            .json(&ScoreRequest { query, response })
            .send()
            .map_err(classify_transport)?;
        let status = reply.status();
        if !status.is_success() {
            let body = reply.text().unwrap_or_default();
            return Err(ClassifierError::Protocol(format!("HTTP {status}: {body}")));
        }
        let body = reply.text().map_err(classify_transport)?;
        let parsed: ScoreReply = serde_json::from_str(&body)
            .map_err(|e| ClassifierError::Protocol(format!("invalid reply {body:?}: {e}")))?;
        let p = parsed
            .probability
            .and_then(|v| v.as_f64())
            .ok_or_else(|| ClassifierError::Protocol(format!("missing probability in {body:?}")))?;
        if !(0.0..=1.0).contains(&p) {
            return Err(ClassifierError::Protocol(format!(
                "probability {p} outside [0, 1]"
            )));
        }
        Ok(p)
    }
}

fn classify_transport(e: reqwest::Error) -> ClassifierError {
    if e.is_timeout() {
        ClassifierError::Timeout
    } else {
        ClassifierError::Network(e.to_string())
    }
}

impl Scorer for RemoteScorer {
    fn score(&self, query: &str, response: &str) -> Result<f64, ClassifierError> {
        RemoteScorer::score(self, query, response)
    }
}

/// One-shot scoring call with the default 30 s timeout.
pub fn remote_score(endpoint: &str, query: &str, response: &str) -> Result<f64, ClassifierError> {
    RemoteScorer::new(endpoint)?.score(query, response)
}
