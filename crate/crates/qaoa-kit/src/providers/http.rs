//! HTTP-backed providers following the widely used chat-completion and
//! embedding request shapes (`POST {base}/chat/completions`,
//! `POST {base}/embeddings`), with bearer-token auth and retrying transport
//! failures under the configured backoff policy.
//!
//! Configuration comes from environment-variable trios, one per capability:
//!
//! - `QAOA_CHAT_BASE_URL` / `QAOA_CHAT_API_KEY` / `QAOA_CHAT_MODEL`
//! - `QAOA_JUDGE_BASE_URL` / `QAOA_JUDGE_API_KEY` / `QAOA_JUDGE_MODEL`
//! - `QAOA_EMBED_BASE_URL` / `QAOA_EMBED_API_KEY` / `QAOA_EMBED_MODEL`

use serde::Deserialize;
use serde_json::json;
use std::time::Duration;

use super::{
    with_retry, ChatProvider, ChatRequest, ChatResponse, EmbeddingBatch, EmbeddingProvider,
    FinishStatus, ProviderError, RetryPolicy,
};

pub const CHAT_ENV_PREFIX: &str = "QAOA_CHAT";
pub const JUDGE_ENV_PREFIX: &str = "QAOA_JUDGE";
pub const EMBED_ENV_PREFIX: &str = "QAOA_EMBED";

/// Endpoint settings shared by both provider kinds.
#[derive(Debug, Clone)]
pub struct EndpointConfig {
    pub base_url: String,
    pub api_key: String,
    pub model: String,
    pub retry: RetryPolicy,
    pub request_timeout: Duration,
}

impl EndpointConfig {
    pub fn new(base_url: impl Into<String>, api_key: impl Into<String>, model: impl Into<String>) -> Self {
        EndpointConfig {
            base_url: base_url.into(),
            api_key: api_key.into(),
            model: model.into(),
            retry: RetryPolicy::default(),
            request_timeout: Duration::from_secs(120),
        }
    }

    /// Reads the `{PREFIX}_BASE_URL`, `{PREFIX}_API_KEY`, and
    /// `{PREFIX}_MODEL` variables. No defaults: a missing variable is an
    /// error naming it.
    pub fn from_env(prefix: &str) -> Result<Self, ProviderError> {
        let var = |suffix: &str| -> Result<String, ProviderError> {
            let name = format!("{prefix}_{suffix}");
            std::env::var(&name)
                .map_err(|_| ProviderError::Auth(format!("missing environment variable {name}")))
        };
        Ok(EndpointConfig::new(var("BASE_URL")?, var("API_KEY")?, var("MODEL")?))
    }
}

fn classify_status(status: u16, body: &str) -> ProviderError {
    match status {
        401 | 403 => ProviderError::Auth(format!("status {status}: {body}")),
        _ => ProviderError::Transport(format!("status {status}: {body}")),
    }
}

/// Chat-completion provider over HTTP.
pub struct HttpChat {
    config: EndpointConfig,
    client: reqwest::blocking::Client,
}

impl HttpChat {
    pub fn new(config: EndpointConfig) -> Result<Self, ProviderError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(config.request_timeout)
            .build()
            .map_err(|e| ProviderError::Transport(e.to_string()))?;
        Ok(HttpChat { config, client })
    }

    pub fn from_env(prefix: &str) -> Result<Self, ProviderError> {
        HttpChat::new(EndpointConfig::from_env(prefix)?)
    }

    fn attempt(&self, request: &ChatRequest) -> Result<ChatResponse, ProviderError> {
        let mut messages = Vec::with_capacity(request.messages.len() + 1);
        if !request.system.is_empty() {
            messages.push(json!({"role": "system", "content": request.system}));
        }
        for m in &request.messages {
            messages.push(json!({"role": m.role, "content": m.content}));
        }
        let mut body = json!({"model": self.config.model, "messages": messages});
        if let Some(t) = request.params.temperature {
            body["temperature"] = json!(t);
        }
        if let Some(m) = request.params.max_tokens {
            body["max_tokens"] = json!(m);
        }

        let url = format!("{}/chat/completions", self.config.base_url.trim_end_matches('/'));
        let response = self
            .client
            .post(url)
            .bearer_auth(&self.config.api_key)
            .json(&body)
            .send()
            .map_err(|e| ProviderError::Transport(e.to_string()))?;
        let status = response.status().as_u16();
        let text = response.text().map_err(|e| ProviderError::Transport(e.to_string()))?;
        if !(200..300).contains(&status) {
            return Err(classify_status(status, &text));
        }

        #[derive(Deserialize)]
        struct Choice {
            message: ChoiceMessage,
            finish_reason: Option<String>,
        }
        #[derive(Deserialize)]
        struct ChoiceMessage {
            content: Option<String>,
        }
        #[derive(Deserialize)]
        struct Completion {
            choices: Vec<Choice>,
        }

        let completion: Completion =
            serde_json::from_str(&text).map_err(|e| ProviderError::Malformed(e.to_string()))?;
        let choice = completion
            .choices
            .into_iter()
            .next()
            .ok_or_else(|| ProviderError::Malformed("no choices in response".to_string()))?;
        let finish = match choice.finish_reason.as_deref() {
            Some("stop") | None => FinishStatus::Stop,
            Some("length") => FinishStatus::Length,
            Some(other) => FinishStatus::Other(other.to_string()),
        };
        Ok(ChatResponse { text: choice.message.content.unwrap_or_default(), finish, retries: 0 })
    }
}

impl ChatProvider for HttpChat {
    fn chat(&self, request: &ChatRequest) -> Result<ChatResponse, ProviderError> {
        if request.is_empty() {
            return Err(ProviderError::EmptyRequest);
        }
        let mut retries = 0u32;
        let mut response = with_retry(
            &self.config.retry,
            &mut std::thread::sleep,
            &mut |attempt| {
                retries = attempt - 1;
                self.attempt(request)
            },
        )?;
        response.retries = retries;
        Ok(response)
    }
}

/// Embedding provider over HTTP. Inputs are sent in batches of
/// `batch_size`; result order follows input order.
pub struct HttpEmbedder {
    config: EndpointConfig,
    client: reqwest::blocking::Client,
    batch_size: usize,
}

impl HttpEmbedder {
    pub fn new(config: EndpointConfig) -> Result<Self, ProviderError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(config.request_timeout)
            .build()
            .map_err(|e| ProviderError::Transport(e.to_string()))?;
        Ok(HttpEmbedder { config, client, batch_size: 64 })
    }

    pub fn from_env(prefix: &str) -> Result<Self, ProviderError> {
        HttpEmbedder::new(EndpointConfig::from_env(prefix)?)
    }

    pub fn with_batch_size(mut self, batch_size: usize) -> Self {
        self.batch_size = batch_size.max(1);
        self
    }

    fn attempt(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, ProviderError> {
        let url = format!("{}/embeddings", self.config.base_url.trim_end_matches('/'));
        let body = json!({"model": self.config.model, "input": texts});
        let response = self
            .client
            .post(url)
            .bearer_auth(&self.config.api_key)
            .json(&body)
            .send()
            .map_err(|e| ProviderError::Transport(e.to_string()))?;
        let status = response.status().as_u16();
        let text = response.text().map_err(|e| ProviderError::Transport(e.to_string()))?;
        if !(200..300).contains(&status) {
            return Err(classify_status(status, &text));
        }

        #[derive(Deserialize)]
        struct Item {
            index: usize,
            embedding: Vec<f64>,
        }
        #[derive(Deserialize)]
        struct Reply {
            data: Vec<Item>,
        }

        let reply: Reply =
            serde_json::from_str(&text).map_err(|e| ProviderError::Malformed(e.to_string()))?;
        if reply.data.len() != texts.len() {
            return Err(ProviderError::Malformed(format!(
                "expected {} embeddings, got {}",
                texts.len(),
                reply.data.len()
            )));
        }
        let mut items = reply.data;
        items.sort_by_key(|i| i.index);
        Ok(items.into_iter().map(|i| i.embedding).collect())
    }
}

impl EmbeddingProvider for HttpEmbedder {
    fn embed(&self, texts: &[String]) -> Result<EmbeddingBatch, ProviderError> {
        if texts.is_empty() {
            return Err(ProviderError::EmptyInput);
        }
        let mut vectors = Vec::with_capacity(texts.len());
        for chunk in texts.chunks(self.batch_size) {
            let batch = with_retry(
                &self.config.retry,
                &mut std::thread::sleep,
                &mut |_| self.attempt(chunk),
            )?;
            vectors.extend(batch);
        }
        EmbeddingBatch::new(vectors)
    }
}
