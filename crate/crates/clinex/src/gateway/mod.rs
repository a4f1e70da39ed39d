//! Uniform access to chat-completion backends: a remote OpenAI-style HTTP
//! endpoint or a deterministic scripted stand-in, plus `%SLOT%` prompt
//! templating. Requests default to temperature 0 and 1024 new tokens.

mod http;
mod scripted;
mod template;

use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use http::HttpBackend;
pub use scripted::{render_queue_script, ScriptedBackend};
pub use template::{bindings, PromptTemplate, TemplateError};

/// Name of the environment variable holding the endpoint credential.
pub const API_KEY_ENV: &str = "CLINEX_API_KEY";

pub const DEFAULT_TEMPERATURE: f64 = 0.0;
pub const DEFAULT_MAX_NEW_TOKENS: u32 = 1024;
/// Hosted-endpoint runs cap output at the limit the order prompt itself
/// states.
pub const HOSTED_MAX_NEW_TOKENS: u32 = 4000;
pub const DEFAULT_MAX_IN_FLIGHT: usize = 4;

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("template error: {0}")]
    Template(#[from] TemplateError),
    #[error("backend error: {0}")]
    Backend(String),
    #[error("backend configuration error: {0}")]
    Config(String),
}

/// One chat-completion request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<String>,
    pub user: String,
    pub temperature: f64,
    pub max_new_tokens: u32,
    pub model_id: String,
}

impl ChatRequest {
    pub fn new(user: impl Into<String>) -> ChatRequest {
        ChatRequest {
            system: None,
            user: user.into(),
            temperature: DEFAULT_TEMPERATURE,
            max_new_tokens: DEFAULT_MAX_NEW_TOKENS,
            model_id: String::new(),
        }
    }

    pub fn validate(&self) -> Result<(), GatewayError> {
        if self.user.trim().is_empty() {
            return Err(GatewayError::Config("request user text must be non-empty".into()));
        }
        if self.max_new_tokens == 0 {
            return Err(GatewayError::Config("max_new_tokens must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Finish {
    Stop,
    Length,
    Error,
}

/// One chat-completion response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatResponse {
    pub text: String,
    pub finish: Finish,
    pub latency_ms: u64,
}

/// A chat-completion backend. Implementations are thread-safe; in-flight
/// concurrency is bounded by the backend's own limiter.
pub trait ChatBackend: Send + Sync {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError>;

    /// Identity string recorded in run manifests.
    fn identity(&self) -> String;
}

/// Retry policy for transient failures: up to `max_retries` retries with
/// exponential backoff starting at `backoff_base`.
#[derive(Debug, Clone, Copy)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub backoff_base: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy { max_retries: 2, backoff_base: Duration::from_millis(500) }
    }
}

/// Outcome classification for one attempt.
pub(crate) enum AttemptError {
    /// Worth retrying (network failure, 5xx, 429).
    Transient(String),
    /// Never retried (auth/config problems).
    Fatal(GatewayError),
}

/// Run `attempt` under the retry policy. Total tries = 1 + retries.
pub(crate) fn with_retries<'a, T>(
    policy: &RetryPolicy,
    mut attempt: impl FnMut() -> Result<T, AttemptError> + 'a,
) -> Result<T, GatewayError> {
    let mut last_err = String::new();
    for try_no in 0..=policy.max_retries {
        if try_no > 0 {
            let backoff = policy.backoff_base * 2u32.pow(try_no - 1);
            std::thread::sleep(backoff);
        }
        match attempt() {
            Ok(v) => return Ok(v),
            Err(AttemptError::Fatal(e)) => return Err(e),
            Err(AttemptError::Transient(msg)) => last_err = msg,
        }
    }
    Err(GatewayError::Backend(format!(
        "exhausted {} retries: {last_err}",
        policy.max_retries
    )))
}

/// Render `template` with `bindings` and send it through the backend.
pub fn complete(backend: &dyn ChatBackend, request: &ChatRequest) -> Result<ChatResponse, GatewayError> {
    request.validate()?;
    backend.complete(request)
}
