//! Chat transports: a live OpenAI-compatible HTTP client, a replay
//! transport answering purely from a recording store, a recording wrapper,
//! and an in-memory mock for unit tests.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use serde::Deserialize;
use serde_json::json;

use crate::error::LlmError;
use crate::message::{ChatMessage, ModelParams};
use crate::transcript::{request_hash, RecordingStore, Transcript};

/// A fully prepared chat request. `template_id` and `rendered` (the final
/// user-turn text) feed the request hash; `messages` is what a live
/// provider actually receives.
#[derive(Debug, Clone)]
pub struct ChatRequest {
    pub template_id: String,
    pub rendered: String,
    pub messages: Vec<ChatMessage>,
    pub params: ModelParams,
}

impl ChatRequest {
    pub fn from_prompt(template_id: &str, rendered: &str, params: ModelParams) -> Self {
        Self {
            template_id: template_id.to_string(),
            rendered: rendered.to_string(),
            messages: vec![ChatMessage::user(rendered)],
            params,
        }
    }

    pub fn hash(&self) -> String {
        request_hash(&self.template_id, &self.rendered, &self.params)
    }
}

pub trait ChatTransport: Send + Sync {
    fn complete(&self, request: &ChatRequest) -> Result<String, LlmError>;

    /// Whether image attachments can be forwarded. Text-only transports
    /// (and replay) report false and callers fall back to numeric summaries.
    fn supports_images(&self) -> bool {
        false
    }
}

/// Replay transport: answers from the recording store and never touches the
/// network (it has no client to touch it with).
pub struct ReplayTransport {
    store: Arc<RecordingStore>,
}

impl ReplayTransport {
    pub fn new(store: Arc<RecordingStore>) -> Self {
        Self { store }
    }
}

impl ChatTransport for ReplayTransport {
    fn complete(&self, request: &ChatRequest) -> Result<String, LlmError> {
        let hash = request.hash();
        self.store.lookup(&hash).ok_or_else(|| LlmError::ReplayMiss {
            hash,
            template: request.template_id.clone(),
            prompt: request.rendered.clone(),
        })
    }
}

/// Live OpenAI-compatible chat-completions client (blocking).
pub struct LiveTransport {
    base_url: String,
    api_key: Option<String>,
    client: reqwest::blocking::Client,
    image_capable: bool,
}

impl LiveTransport {
    /// `base_url` up to the API root, e.g. `https://api.openai.com/v1`.
    /// The key is read from `api_key_env` when set.
    pub fn new(base_url: &str, api_key_env: Option<&str>, image_capable: bool) -> Self {
        Self {
            base_url: base_url.trim_end_matches('/').to_string(),
            api_key: api_key_env.and_then(|v| std::env::var(v).ok()),
            client: reqwest::blocking::Client::new(),
            image_capable,
        }
    }
}

#[derive(Deserialize)]
struct CompletionResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: AssistantMessage,
}

#[derive(Deserialize)]
struct AssistantMessage {
    content: String,
}

impl ChatTransport for LiveTransport {
    fn complete(&self, request: &ChatRequest) -> Result<String, LlmError> {
        let messages: Vec<serde_json::Value> = request
            .messages
            .iter()
            .map(|m| {
                json!({
                    "role": match m.role {
                        crate::message::Role::System => "system",
                        crate::message::Role::User => "user",
                        crate::message::Role::Assistant => "assistant",
                    },
                    "content": m.text,
                })
            })
            .collect();
        let mut body = json!({
            "model": request.params.model,
            "temperature": request.params.temperature,
            "max_tokens": request.params.max_tokens,
            "messages": messages,
        });
        if let Some(seed) = request.params.seed {
            body["seed"] = json!(seed);
        }
        let mut req = self
            .client
            .post(format!("{}/chat/completions", self.base_url))
            .json(&body);
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| LlmError::Network(e.to_string()))?;
        let status = resp.status();
        let text = resp.text().map_err(|e| LlmError::Network(e.to_string()))?;
        if !status.is_success() {
            return Err(LlmError::Provider {
                status: status.as_u16(),
                body: text,
            });
        }
        let parsed: CompletionResponse =
            serde_json::from_str(&text).map_err(|e| LlmError::Network(e.to_string()))?;
        parsed
            .choices
            .into_iter()
            .next()
            .map(|c| c.message.content)
            .ok_or_else(|| LlmError::Network("response had no choices".into()))
    }

    fn supports_images(&self) -> bool {
        self.image_capable
    }
}

/// Wraps any transport and appends one transcript per completed request.
pub struct RecordingTransport<T: ChatTransport> {
    inner: T,
    store: Arc<RecordingStore>,
}

impl<T: ChatTransport> RecordingTransport<T> {
    pub fn new(inner: T, store: Arc<RecordingStore>) -> Self {
        Self { inner, store }
    }
}

impl<T: ChatTransport> ChatTransport for RecordingTransport<T> {
    fn complete(&self, request: &ChatRequest) -> Result<String, LlmError> {
        let response = self.inner.complete(request)?;
        self.store.append(&Transcript {
            hash: request.hash(),
            template_id: request.template_id.clone(),
            request_text: request.rendered.clone(),
            response: response.clone(),
            model: request.params.model.clone(),
            timestamp: now_utc(),
        })?;
        Ok(response)
    }

    fn supports_images(&self) -> bool {
        self.inner.supports_images()
    }
}

/// Test transport answering from a queue, recording every request it saw.
#[derive(Default)]
pub struct MockTransport {
    responses: Mutex<Vec<String>>,
    pub requests: Mutex<Vec<ChatRequest>>,
}

impl MockTransport {
    pub fn with_responses(responses: &[&str]) -> Self {
        Self {
            responses: Mutex::new(responses.iter().rev().map(|s| s.to_string()).collect()),
            requests: Mutex::new(Vec::new()),
        }
    }
}

impl ChatTransport for MockTransport {
    fn complete(&self, request: &ChatRequest) -> Result<String, LlmError> {
        self.requests
            .lock()
            .expect("mock request log")
            .push(request.clone());
        self.responses
            .lock()
            .expect("mock response queue")
            .pop()
            .ok_or_else(|| LlmError::Network("mock transport queue empty".into()))
    }
}

/// Transport that fails on any use and counts attempts; plugged in by tests
/// proving that replay paths perform zero network activity.
#[derive(Default)]
pub struct FaultTransport {
    pub attempts: AtomicUsize,
}

impl ChatTransport for FaultTransport {
    fn complete(&self, _request: &ChatRequest) -> Result<String, LlmError> {
        self.attempts.fetch_add(1, Ordering::SeqCst);
        Err(LlmError::Network(
            "network use attempted in an offline context".into(),
        ))
    }
}

pub(crate) fn now_utc() -> String {
    // Seconds since the epoch; enough for transcript bookkeeping without a
    // clock-formatting dependency.
    let secs = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    format!("{secs}")
}
