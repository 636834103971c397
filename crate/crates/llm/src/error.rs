use thiserror::Error;

#[derive(Debug, Error)]
pub enum LlmError {
    #[error("unknown template {0:?}")]
    UnknownTemplate(String),
    #[error("missing slot {slot:?} for template {template:?}")]
    MissingSlot { template: String, slot: String },
    #[error("network error: {0}")]
    Network(String),
    #[error("provider returned {status}: {body}")]
    Provider { status: u16, body: String },
    #[error("no recorded response for hash {hash} (template {template:?}); rendered prompt:\n{prompt}")]
    ReplayMiss {
        hash: String,
        template: String,
        prompt: String,
    },
    #[error("could not parse response: {0}")]
    ParseFailure(String),
    #[error("score {0} outside 0..=5")]
    ScoreOutOfRange(i64),
    #[error("expected {expected} annotations, got {got}")]
    CountMismatch { expected: usize, got: usize },
    #[error("retries exhausted after {attempts} attempts; last response:\n{last_response}")]
    RetriesExhausted {
        attempts: usize,
        last_response: String,
    },
    #[error("recording store i/o: {0}")]
    Store(String),
}

impl LlmError {
    pub fn is_parse_failure(&self) -> bool {
        matches!(
            self,
            LlmError::ParseFailure(_) | LlmError::ScoreOutOfRange(_) | LlmError::CountMismatch { .. }
        )
    }
}
