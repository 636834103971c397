//! Chat client: renders templates, routes requests through a transport,
//! enforces an in-flight cap plus a token-bucket rate limit, and drives the
//! parse-with-corrective-retry loop.

use std::collections::BTreeMap;
use std::sync::{Arc, Condvar, Mutex};
use std::time::{Duration, Instant};

use crate::error::LlmError;
use crate::message::ModelParams;
use crate::template::render;
use crate::transport::{ChatRequest, ChatTransport};

/// Default parse-retry budget.
pub const DEFAULT_RETRY_BUDGET: usize = 3;

struct Limiter {
    max_in_flight: usize,
    in_flight: Mutex<usize>,
    available: Condvar,
    bucket: Mutex<TokenBucket>,
}

struct TokenBucket {
    capacity: f64,
    tokens: f64,
    refill_per_sec: f64,
    last: Instant,
}

impl Limiter {
    fn acquire(&self) {
        let mut in_flight = self.in_flight.lock().expect("limiter lock");
        while *in_flight >= self.max_in_flight {
            in_flight = self.available.wait(in_flight).expect("limiter wait");
        }
        *in_flight += 1;
        drop(in_flight);

        loop {
            let wait = {
                let mut bucket = self.bucket.lock().expect("bucket lock");
                let now = Instant::now();
                let elapsed = now.duration_since(bucket.last).as_secs_f64();
                bucket.tokens = (bucket.tokens + elapsed * bucket.refill_per_sec)
                    .min(bucket.capacity);
                bucket.last = now;
                if bucket.tokens >= 1.0 {
                    bucket.tokens -= 1.0;
                    None
                } else {
                    Some(Duration::from_secs_f64(
                        (1.0 - bucket.tokens) / bucket.refill_per_sec,
                    ))
                }
            };
            match wait {
                None => break,
                Some(d) => std::thread::sleep(d),
            }
        }
    }

    fn release(&self) {
        let mut in_flight = self.in_flight.lock().expect("limiter lock");
        *in_flight -= 1;
        drop(in_flight);
        self.available.notify_one();
    }
}

/// Provider-agnostic chat client. Cloning is cheap; all clones share the
/// transport and limiter.
#[derive(Clone)]
pub struct ChatClient {
    transport: Arc<dyn ChatTransport>,
    params: ModelParams,
    limiter: Arc<Limiter>,
    retry_budget: usize,
}

impl ChatClient {
    pub fn new(transport: Arc<dyn ChatTransport>, params: ModelParams) -> Self {
        Self::with_limits(transport, params, 4, 50.0)
    }

    pub fn with_limits(
        transport: Arc<dyn ChatTransport>,
        params: ModelParams,
        max_in_flight: usize,
        requests_per_sec: f64,
    ) -> Self {
        Self {
            transport,
            params,
            limiter: Arc::new(Limiter {
                max_in_flight: max_in_flight.max(1),
                in_flight: Mutex::new(0),
                available: Condvar::new(),
                bucket: Mutex::new(TokenBucket {
                    capacity: requests_per_sec.max(1.0),
                    tokens: requests_per_sec.max(1.0),
                    refill_per_sec: requests_per_sec.max(0.001),
                }),
            }),
            retry_budget: DEFAULT_RETRY_BUDGET,
        }
    }

    pub fn with_retry_budget(mut self, budget: usize) -> Self {
        self.retry_budget = budget.max(1);
        self
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn supports_images(&self) -> bool {
        self.transport.supports_images()
    }

    /// Renders `template_id` with `bindings` and completes it.
    pub fn complete(
        &self,
        template_id: &str,
        bindings: &BTreeMap<String, String>,
    ) -> Result<String, LlmError> {
        let rendered = render(template_id, bindings)?;
        self.complete_rendered(template_id, &rendered)
    }

    /// Completes already-rendered prompt text under `template_id`.
    pub fn complete_rendered(&self, template_id: &str, rendered: &str) -> Result<String, LlmError> {
        let request = ChatRequest::from_prompt(template_id, rendered, self.params.clone());
        self.limiter.acquire();
        let result = self.transport.complete(&request);
        self.limiter.release();
        result
    }

    /// Parse-retry loop: on a parse failure the prompt is re-issued with an
    /// appended corrective instruction, up to the retry budget.
    pub fn complete_with_retry<T>(
        &self,
        template_id: &str,
        bindings: &BTreeMap<String, String>,
        parser: impl Fn(&str) -> Result<T, LlmError>,
    ) -> Result<T, LlmError> {
        let rendered = render(template_id, bindings)?;
        let mut prompt = rendered;
        let mut last_response = String::new();
        for _ in 0..self.retry_budget {
            let response = self.complete_rendered(template_id, &prompt)?;
            match parser(&response) {
                Ok(value) => return Ok(value),
                Err(err) if err.is_parse_failure() => {
                    last_response = response;
                    prompt = format!(
                        "{prompt}\n\nYour previous response could not be parsed ({err}). Answer again, strictly following the requested output format."
                    );
                }
                Err(err) => return Err(err),
            }
        }
        Err(LlmError::RetriesExhausted {
            attempts: self.retry_budget,
            last_response,
        })
    }
}
