//! Chat-completions client for OpenAI-style HTTP endpoints. The credential
//! comes from the `CLINEX_API_KEY` environment variable, never from config
//! files. Transient failures (timeouts, 429, 5xx) are retried under the
//! backend's policy; auth failures are not.

use std::sync::{Condvar, Mutex};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{
    with_retries, AttemptError, ChatBackend, ChatRequest, ChatResponse, Finish, GatewayError,
    RetryPolicy, API_KEY_ENV, DEFAULT_MAX_IN_FLIGHT,
};

/// Counting semaphore bounding concurrent in-flight requests.
struct InFlight {
    slots: Mutex<usize>,
    freed: Condvar,
}

impl InFlight {
    fn new(limit: usize) -> InFlight {
        InFlight { slots: Mutex::new(limit.max(1)), freed: Condvar::new() }
    }

    fn acquire(&self) -> InFlightGuard<'_> {
        let mut slots = self.slots.lock().expect("in-flight lock");
        while *slots == 0 {
            slots = self.freed.wait(slots).expect("in-flight wait");
        }
        *slots -= 1;
        InFlightGuard { limiter: self }
    }
}

struct InFlightGuard<'a> {
    limiter: &'a InFlight,
}

impl Drop for InFlightGuard<'_> {
    fn drop(&mut self) {
        let mut slots = self.limiter.slots.lock().expect("in-flight lock");
        *slots += 1;
        self.limiter.freed.notify_one();
    }
}

#[derive(Serialize)]
struct WireMessage<'a> {
    role: &'static str,
    content: &'a str,
}

#[derive(Serialize)]
struct WireRequest<'a> {
    model: &'a str,
    messages: Vec<WireMessage<'a>>,
    temperature: f64,
    max_tokens: u32,
}

#[derive(Deserialize)]
struct WireChoice {
    message: WireChoiceMessage,
    #[serde(default)]
    finish_reason: Option<String>,
}

#[derive(Deserialize)]
struct WireChoiceMessage {
    #[serde(default)]
    content: Option<String>,
}

#[derive(Deserialize)]
struct WireResponse {
    choices: Vec<WireChoice>,
}

/// Backend speaking the chat-completions JSON protocol.
pub struct HttpBackend {
    endpoint: String,
    api_key: Option<String>,
    policy: RetryPolicy,
    limiter: InFlight,
    client: reqwest::blocking::Client,
}

impl HttpBackend {
    /// Build a backend for `endpoint` (the full completions URL), reading
    /// the credential from `CLINEX_API_KEY` if set.
    pub fn new(endpoint: impl Into<String>) -> HttpBackend {
        HttpBackend::with_options(endpoint, RetryPolicy::default(), DEFAULT_MAX_IN_FLIGHT)
    }

    pub fn with_options(
        endpoint: impl Into<String>,
        policy: RetryPolicy,
        max_in_flight: usize,
    ) -> HttpBackend {
        HttpBackend {
            endpoint: endpoint.into(),
            api_key: std::env::var(API_KEY_ENV).ok(),
            policy,
            limiter: InFlight::new(max_in_flight),
            client: reqwest::blocking::Client::new(),
        }
    }

    fn attempt(&self, request: &ChatRequest) -> Result<ChatResponse, AttemptError> {
        let mut messages = Vec::new();
        if let Some(system) = &request.system {
            messages.push(WireMessage { role: "system", content: system });
        }
        messages.push(WireMessage { role: "user", content: &request.user });
        let body = WireRequest {
            model: &request.model_id,
            messages,
            temperature: request.temperature,
            max_tokens: request.max_new_tokens,
        };

        let started = Instant::now();
        let mut builder = self.client.post(&self.endpoint).json(&body);
        if let Some(key) = &self.api_key {
            builder = builder.bearer_auth(key);
        }
        let response = builder
            .send()
            .map_err(|e| AttemptError::Transient(format!("request failed: {e}")))?;

        let status = response.status();
        if status == reqwest::StatusCode::UNAUTHORIZED || status == reqwest::StatusCode::FORBIDDEN {
            return Err(AttemptError::Fatal(GatewayError::Config(format!(
                "endpoint rejected credentials ({status}); set {API_KEY_ENV}"
            ))));
        }
        if status.is_server_error() || status == reqwest::StatusCode::TOO_MANY_REQUESTS {
            return Err(AttemptError::Transient(format!("endpoint returned {status}")));
        }
        if !status.is_success() {
            return Err(AttemptError::Fatal(GatewayError::Backend(format!(
                "endpoint returned {status}"
            ))));
        }

        let wire: WireResponse = response
            .json()
            .map_err(|e| AttemptError::Transient(format!("bad response body: {e}")))?;
        let choice = wire
            .choices
            .into_iter()
            .next()
            .ok_or_else(|| AttemptError::Transient("response had no choices".into()))?;
        let finish = match choice.finish_reason.as_deref() {
            Some("stop") | None => Finish::Stop,
            Some("length") => Finish::Length,
            Some(_) => Finish::Error,
        };
        Ok(ChatResponse {
            text: choice.message.content.unwrap_or_default(),
            finish,
            latency_ms: started.elapsed().as_millis() as u64,
        })
    }
}

impl ChatBackend for HttpBackend {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        request.validate()?;
        let _slot = self.limiter.acquire();
        with_retries(&self.policy, || self.attempt(request))
    }

    fn identity(&self) -> String {
        format!("http:{}", self.endpoint)
    }
}
