//! Provider-agnostic chat client, prompt template library, structured-output
//! parsers, and record/replay transports that make every model-dependent
//! test deterministic.

pub mod client;
pub mod error;
pub mod http;
pub mod message;
pub mod parse;
pub mod template;
pub mod transcript;
pub mod transport;

pub use client::{ChatClient, DEFAULT_RETRY_BUDGET};
pub use error::LlmError;
pub use message::{ChatMessage, ModelParams, Role};
pub use parse::{
    parse_cell_type, parse_hypotheses, parse_numbered_list, parse_refined_annotations,
    parse_score, CellTypeAnswer, HypothesisBlock,
};
pub use template::{bindings, render, template, PromptTemplate, TEMPLATES};
pub use transcript::{normalize_text, request_hash, RecordingStore, Transcript};
pub use transport::{
    ChatRequest, ChatTransport, FaultTransport, LiveTransport, MockTransport, RecordingTransport,
    ReplayTransport,
};
