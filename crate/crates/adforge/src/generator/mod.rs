//! Prompt construction for the QA system and the ad-rewriter, and the
//! generation backends that turn prompts into candidate texts.

pub mod chat;
pub mod prompts;
pub mod stub;
pub mod template;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use chat::{sample_candidates, ChatClient, EndpointConfig};
pub use prompts::{build_qa_prompt, build_rewrite_prompt};
pub use stub::{ScriptedGenerator, StubGenerator};
pub use template::{PromptTemplate, TemplateError};

pub const DEFAULT_MAX_TOKENS: u32 = 512;
/// The two sampling temperatures used for rewriting runs.
pub const DEFAULT_TEMPERATURES: [f64; 2] = [1.0, 0.5];

#[derive(Debug, Error)]
pub enum GenError {
    #[error("invalid generation request: {0}")]
    InvalidRequest(String),
    #[error("task {0:?} has no passages")]
    EmptyPassages(String),
    #[error("required field {0:?} is empty")]
    MissingField(&'static str),
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error("the stub generator needs a seed")]
    MissingSeed,
    #[error("missing configuration: {0}")]
    MissingConfig(String),
    #[error("network error: {0}")]
    Network(String),
    #[error("request timed out")]
    Timeout,
    #[error("endpoint returned HTTP {status}: {body}")]
    Api { status: u16, body: String },
    #[error("protocol error: {0}")]
    Protocol(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRequest {
    pub prompt: String,
    pub temperature: f64,
    pub n: usize,
    pub max_tokens: u32,
    /// Only honored by the stub backend.
    pub seed: Option<u64>,
}

impl GenerationRequest {
    pub fn new(prompt: impl Into<String>, temperature: f64, n: usize) -> Self {
        Self {
            prompt: prompt.into(),
            temperature,
            n,
            max_tokens: DEFAULT_MAX_TOKENS,
            seed: None,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn validate(&self) -> Result<(), GenError> {
        if !(0.0..=2.0).contains(&self.temperature) {
            return Err(GenError::InvalidRequest(format!(
                "temperature {} outside [0, 2]",
                self.temperature
            )));
        }
        if self.n == 0 {
            return Err(GenError::InvalidRequest("n must be at least 1".into()));
        }
        if self.max_tokens == 0 {
            return Err(GenError::InvalidRequest("max_tokens must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Candidate {
    pub index: usize,
    pub text: String,
    pub finish_reason: String,
    /// Set when the backend stopped at the token limit.
    #[serde(default)]
    pub truncated: bool,
}

impl Candidate {
    pub fn new(index: usize, text: impl Into<String>, finish_reason: impl Into<String>) -> Self {
        let finish_reason = finish_reason.into();
        Self {
            index,
            text: text.into(),
            truncated: finish_reason == "length",
            finish_reason,
        }
    }
}

/// A text generation backend.
///
/// Implementations return exactly `request.n` candidates indexed `0..n`, or
/// an error.
pub trait Generator: Sync {
    fn generate(&self, request: &GenerationRequest) -> Result<Vec<Candidate>, GenError>;

    fn name(&self) -> &str;
}

impl<G: Generator + ?Sized> Generator for &G {
    fn generate(&self, request: &GenerationRequest) -> Result<Vec<Candidate>, GenError> {
        (**self).generate(request)
    }

    fn name(&self) -> &str {
        (**self).name()
    }
}

impl<G: Generator + ?Sized> Generator for Box<G> {
    fn generate(&self, request: &GenerationRequest) -> Result<Vec<Candidate>, GenError> {
        (**self).generate(request)
    }

    fn name(&self) -> &str {
        (**self).name()
    }
}

/// Convenience wrapper around [`StubGenerator`].
pub fn stub_generate(request: &GenerationRequest) -> Result<Vec<Candidate>, GenError> {
    StubGenerator.generate(request)
}
