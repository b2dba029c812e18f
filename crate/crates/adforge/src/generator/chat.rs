//! HTTP client for hosted chat-completion endpoints.
//!
//! Requests go to `{base_url}/chat/completions` with a single user message.
//! Providers that return fewer choices than requested are topped up with
//! additional calls, fanned out with a bounded number in flight.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{Candidate, GenError, GenerationRequest, Generator};
use crate::util::bounded_map;

pub const ENV_BASE_URL: &str = "ADFORGE_LLM_BASE_URL";
pub const ENV_API_KEY: &str = "ADFORGE_LLM_API_KEY";
pub const ENV_MODEL: &str = "ADFORGE_LLM_MODEL";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EndpointConfig {
    pub base_url: String,
    #[serde(skip_serializing)]
    pub api_key: Option<String>,
    pub model: String,
    /// Largest `n` the provider accepts per call, if known up front.
    pub max_n_per_call: Option<usize>,
    pub max_in_flight: usize,
    pub timeout_secs: u64,
}

impl Default for EndpointConfig {
    fn default() -> Self {
        Self {
            base_url: String::new(),
            api_key: None,
            model: String::new(),
            max_n_per_call: None,
            max_in_flight: 4,
            timeout_secs: 120,
        }
    }
}

impl EndpointConfig {
    pub fn new(base_url: impl Into<String>, model: impl Into<String>) -> Self {
        Self {
            base_url: base_url.into(),
            model: model.into(),
            ..Self::default()
        }
    }

    /// Fills `base_url`, `api_key` and `model` from the environment where set.
    pub fn with_env_overrides(mut self) -> Self {
        if let Ok(v) = std::env::var(ENV_BASE_URL) {
            self.base_url = v;
        }
        if let Ok(v) = std::env::var(ENV_API_KEY) {
            self.api_key = Some(v);
        }
        if let Ok(v) = std::env::var(ENV_MODEL) {
            self.model = v;
        }
        self
    }
}

#[derive(Serialize)]
struct Message<'a> {
    role: &'a str,
    content: &'a str,
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: [Message<'a>; 1],
    temperature: f64,
    n: usize,
    max_tokens: u32,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    #[serde(default)]
    index: Option<usize>,
    message: ReplyMessage,
    #[serde(default)]
    finish_reason: Option<String>,
}

#[derive(Deserialize)]
struct ReplyMessage {
    #[serde(default)]
    content: Option<String>,
}

#[derive(Debug, Clone)]
pub struct ChatClient {
    config: EndpointConfig,
    http: reqwest::blocking::Client,
}

impl ChatClient {
    pub fn new(config: EndpointConfig) -> Result<Self, GenError> {
        if config.base_url.is_empty() {
            return Err(GenError::MissingConfig(format!(
                "no endpoint base URL (set {ENV_BASE_URL} or generation.base_url)"
            )));
        }
        let http = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| GenError::Network(e.to_string()))?;
        Ok(Self { config, http })
    }

    pub fn config(&self) -> &EndpointConfig {
        &self.config
    }

    fn call(&self, request: &GenerationRequest, n: usize) -> Result<Vec<(String, String)>, GenError> {
        let url = format!("{}/chat/completions", self.config.base_url.trim_end_matches('/'));
        let body = ChatRequest {
            model: &self.config.model,
            messages: [Message {
                role: "user",
                content: &request.prompt,
            }],
            temperature: request.temperature,
            n,
            max_tokens: request.max_tokens,
        };
        let mut builder = self.http.post(url).json(&body);
        if let Some(key) = &self.config.api_key {
            builder = builder.bearer_auth(key);
        }
        let reply = builder.send().map_err(transport_error)?;
        let status = reply.status();
        let text = reply.text().map_err(transport_error)?;
        if !status.is_success() {
            return Err(GenError::Api {
                status: status.as_u16(),
                body: text,
            });
        }
        let mut parsed: ChatResponse = serde_json::from_str(&text)
            .map_err(|e| GenError::Protocol(format!("unreadable completion reply: {e}")))?;
        parsed.choices.sort_by_key(|c| c.index.unwrap_or(usize::MAX));
        Ok(parsed
            .choices
            .into_iter()
            .map(|c| {
                (
                    c.message.content.unwrap_or_default(),
                    c.finish_reason.unwrap_or_else(|| "unknown".into()),
                )
            })
            .collect())
    }
}

fn transport_error(e: reqwest::Error) -> GenError {
    if e.is_timeout() {
        GenError::Timeout
    } else {
        GenError::Network(e.to_string())
    }
}

impl Generator for ChatClient {
    fn generate(&self, request: &GenerationRequest) -> Result<Vec<Candidate>, GenError> {
        request.validate()?;
        let n = request.n;
        let mut cap = self.config.max_n_per_call.unwrap_or(n).clamp(1, n);
        let mut texts: Vec<(String, String)> = Vec::with_capacity(n);

        // The first call reveals how many choices the provider actually returns.
        let first = self.call(request, cap)?;
        if first.is_empty() {
            return Err(GenError::Protocol("endpoint returned no choices".into()));
        }
        cap = cap.min(first.len());
        texts.extend(first.into_iter().take(n));

        while texts.len() < n {
            let remaining = n - texts.len();
            let batches: Vec<usize> = (0..remaining)
                .step_by(cap)
                .map(|start| cap.min(remaining - start))
                .collect();
            let results = bounded_map(&batches, self.config.max_in_flight, |_, &k| self.call(request, k));
            for batch in results {
                let batch = batch?;
                if batch.is_empty() {
                    return Err(GenError::Protocol("endpoint returned no choices".into()));
                }
                cap = cap.min(batch.len());
                let room = n - texts.len();
                texts.extend(batch.into_iter().take(room));
            }
        }

        Ok(texts
            .into_iter()
            .enumerate()
            .map(|(i, (text, finish))| {
                let c = Candidate::new(i, text, finish);
                if c.truncated {
                    log::warn!("candidate {i} hit the max_tokens limit");
                }
                c
            })
            .collect())
    }

    fn name(&self) -> &str {
        &self.config.model
    }
}

/// Samples exactly `request.n` candidates from a hosted endpoint.
pub fn sample_candidates(endpoint: &EndpointConfig, request: &GenerationRequest) -> Result<Vec<Candidate>, GenError> {
    ChatClient::new(endpoint.clone())?.generate(request)
}
