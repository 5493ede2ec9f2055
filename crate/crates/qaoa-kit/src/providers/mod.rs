//! Provider contracts for the two external capabilities — chat completion
//! and text embedding — plus retry/backoff plumbing and vector helpers.
//! Deterministic mock implementations live in [`mock`]; the HTTP-backed
//! implementations in [`http`] follow the common chat-completion and
//! embedding request shapes and are configured through environment
//! variables.

pub mod http;
pub mod mock;

mod embedding;

pub use embedding::CachingEmbedder;

use serde::{Deserialize, Serialize};
use std::time::Duration;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ProviderError {
    /// Credential rejected; never retried.
    #[error("authentication failed: {0}")]
    Auth(String),
    /// Transient failures exhausted the retry budget.
    #[error("provider unavailable after {attempts} attempts: {last}")]
    Exhausted { attempts: u32, last: String },
    /// Transport or HTTP-level failure (single attempt).
    #[error("transport failure: {0}")]
    Transport(String),
    /// The provider answered with something undecodable.
    #[error("malformed provider response: {0}")]
    Malformed(String),
    #[error("embedding dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("cosine similarity of a zero vector is undefined")]
    ZeroVector,
    #[error("empty chat request")]
    EmptyRequest,
    #[error("empty embedding input")]
    EmptyInput,
    #[error("mock script exhausted after {0} responses")]
    ScriptExhausted(usize),
}

impl ProviderError {
    /// Auth failures are permanent; everything transport-shaped may recover.
    pub fn is_retryable(&self) -> bool {
        matches!(self, ProviderError::Transport(_))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

impl ChatMessage {
    pub fn user(content: impl Into<String>) -> Self {
        ChatMessage { role: "user".to_string(), content: content.into() }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        ChatMessage { role: "assistant".to_string(), content: content.into() }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DecodingParams {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub temperature: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_tokens: Option<u32>,
}

/// One chat-completion request: system text plus an ordered message list.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub system: String,
    pub messages: Vec<ChatMessage>,
    #[serde(default)]
    pub params: DecodingParams,
}

impl ChatRequest {
    pub fn user(system: impl Into<String>, content: impl Into<String>) -> Self {
        ChatRequest {
            system: system.into(),
            messages: vec![ChatMessage::user(content)],
            params: DecodingParams::default(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.system.is_empty() && self.messages.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FinishStatus {
    Stop,
    Length,
    Other(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatResponse {
    pub text: String,
    pub finish: FinishStatus,
    /// Transient-failure retries spent on this response.
    pub retries: u32,
}

/// A request/response pair recorded verbatim in generation logs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatExchange {
    pub request: ChatRequest,
    pub response: ChatResponse,
    pub latency_ms: u128,
}

/// Chat-completion provider; embodies both the generator and the judge.
pub trait ChatProvider: Send + Sync {
    fn chat(&self, request: &ChatRequest) -> Result<ChatResponse, ProviderError>;
}

/// A batch of embedding vectors, one per input text, in input order.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingBatch {
    pub vectors: Vec<Vec<f64>>,
    pub dimension: usize,
}

impl EmbeddingBatch {
    /// Builds a batch, verifying all vectors share one dimension.
    pub fn new(vectors: Vec<Vec<f64>>) -> Result<Self, ProviderError> {
        let dimension = vectors.first().map(Vec::len).unwrap_or(0);
        for v in &vectors {
            if v.len() != dimension {
                return Err(ProviderError::DimensionMismatch {
                    expected: dimension,
                    got: v.len(),
                });
            }
        }
        Ok(EmbeddingBatch { vectors, dimension })
    }
}

pub trait EmbeddingProvider: Send + Sync {
    /// Embeds a non-empty list of texts; per-text order is preserved.
    fn embed(&self, texts: &[String]) -> Result<EmbeddingBatch, ProviderError>;
}

impl<T: ChatProvider + ?Sized> ChatProvider for Box<T> {
    fn chat(&self, request: &ChatRequest) -> Result<ChatResponse, ProviderError> {
        (**self).chat(request)
    }
}

impl<T: EmbeddingProvider + ?Sized> EmbeddingProvider for Box<T> {
    fn embed(&self, texts: &[String]) -> Result<EmbeddingBatch, ProviderError> {
        (**self).embed(texts)
    }
}

/// Exponential backoff: 1s initial delay, factor 2, at most 5 attempts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetryPolicy {
    pub initial_delay: Duration,
    pub factor: f64,
    pub max_attempts: u32,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy { initial_delay: Duration::from_secs(1), factor: 2.0, max_attempts: 5 }
    }
}

impl RetryPolicy {
    pub fn delay_before_attempt(&self, attempt: u32) -> Duration {
        debug_assert!(attempt >= 2);
        let factor = self.factor.powi(attempt as i32 - 2);
        self.initial_delay.mul_f64(factor)
    }
}

/// Runs `op` under the retry policy. Retryable failures back off through
/// `sleep`; auth and other permanent failures return immediately. On
/// exhaustion the last failure is wrapped in [`ProviderError::Exhausted`].
/// `op` receives the 1-based attempt number.
pub fn with_retry<T>(
    policy: &RetryPolicy,
    sleep: &mut dyn FnMut(Duration),
    op: &mut dyn FnMut(u32) -> Result<T, ProviderError>,
) -> Result<T, ProviderError> {
    let attempts = policy.max_attempts.max(1);
    let mut last = String::new();
    for attempt in 1..=attempts {
        if attempt > 1 {
            sleep(policy.delay_before_attempt(attempt));
        }
        match op(attempt) {
            Ok(value) => return Ok(value),
            Err(e) if e.is_retryable() => last = e.to_string(),
            Err(e) => return Err(e),
        }
    }
    Err(ProviderError::Exhausted { attempts, last })
}

/// Cosine similarity: inner product over the product of norms. Vectors must
/// share a dimension and be non-zero. Bitwise-equal vectors score exactly 1.
pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64, ProviderError> {
    if u.len() != v.len() {
        return Err(ProviderError::DimensionMismatch { expected: u.len(), got: v.len() });
    }
    let norm_u = u.iter().map(|x| x * x).sum::<f64>().sqrt();
    let norm_v = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm_u == 0.0 || norm_v == 0.0 {
        return Err(ProviderError::ZeroVector);
    }
    if u == v {
        return Ok(1.0);
    }
    let dot = u.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
    Ok((dot / (norm_u * norm_v)).clamp(-1.0, 1.0))
}
