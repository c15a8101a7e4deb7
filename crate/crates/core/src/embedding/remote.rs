//! HTTP embedding provider for OpenAI-compatible endpoints.
//!
//! Requests carry `{"model": ..., "input": [texts]}` and expect
//! `{"data": [{"index": n, "embedding": [...]}]}` back. Transient
//! failures (429, 5xx, transport errors) retry with exponential
//! backoff up to a bounded attempt count; a 4xx mentioning the token
//! limit maps to [`ProviderError::InputTooLong`] so the caller can
//! re-truncate. The API key comes from an environment variable only,
//! never from configuration files.

use std::time::Duration;

use serde::Deserialize;

use super::{EmbedError, EmbeddingProvider, ProviderError};

/// Name of the environment variable holding the API key by default.
pub const DEFAULT_API_KEY_ENV: &str = "OCCUMAP_API_KEY";

#[derive(Debug, Clone)]
pub struct RemoteConfig {
    /// Full URL of the embeddings endpoint.
    pub endpoint: String,
    /// Model name sent with each request and recorded in the tag.
    pub model: String,
    pub dimension: usize,
    pub max_input_tokens: usize,
    pub max_batch_size: usize,
    /// Environment variable the API key is read from.
    pub api_key_env: String,
    pub max_attempts: u32,
    pub backoff_base_ms: u64,
}

impl RemoteConfig {
    pub fn new(endpoint: impl Into<String>, model: impl Into<String>, dimension: usize) -> Self {
        Self {
            endpoint: endpoint.into(),
            model: model.into(),
            dimension,
            max_input_tokens: super::DEFAULT_MAX_TOKENS,
            max_batch_size: 64,
            api_key_env: DEFAULT_API_KEY_ENV.to_string(),
            max_attempts: 5,
            backoff_base_ms: 250,
        }
    }
}

pub struct RemoteEmbedder {
    config: RemoteConfig,
    api_key: String,
    tag: String,
    agent: ureq::Agent,
}

impl RemoteEmbedder {
    pub fn new(config: RemoteConfig) -> Result<Self, EmbedError> {
        let api_key = std::env::var(&config.api_key_env).map_err(|_| {
            EmbedError::ProviderUnavailable(format!(
                "environment variable {} is not set",
                config.api_key_env
            ))
        })?;
        let tag = format!("remote-{}-d{}", config.model, config.dimension);
        let agent = ureq::AgentBuilder::new()
            .timeout(Duration::from_secs(120))
            .build();
        Ok(Self {
            config,
            api_key,
            tag,
            agent,
        })
    }

    fn request(&self, texts: &[&str]) -> Result<Vec<Vec<f32>>, ProviderError> {
        let body = serde_json::json!({
            "model": self.config.model,
            "input": texts,
        });
        let mut attempt = 0;
        loop {
            attempt += 1;
            match self
                .agent
                .post(&self.config.endpoint)
                .set("Authorization", &format!("Bearer {}", self.api_key))
                .send_json(body.clone())
            {
                Ok(response) => return parse_response(response, texts.len(), self.config.dimension),
                Err(ureq::Error::Status(code, response)) => {
                    let text = response.into_string().unwrap_or_default();
                    if code < 500 && code != 429 {
                        if looks_too_long(&text) {
                            return Err(ProviderError::InputTooLong);
                        }
                        return Err(ProviderError::Unavailable(format!(
                            "endpoint returned {code}: {text}"
                        )));
                    }
                    if attempt >= self.config.max_attempts {
                        return Err(ProviderError::Unavailable(format!(
                            "endpoint returned {code} after {attempt} attempts"
                        )));
                    }
                }
                Err(ureq::Error::Transport(t)) => {
                    if attempt >= self.config.max_attempts {
                        return Err(ProviderError::Unavailable(format!(
                            "transport failure after {attempt} attempts: {t}"
                        )));
                    }
                }
            }
            let wait = self.config.backoff_base_ms.saturating_mul(1 << (attempt - 1).min(8));
            std::thread::sleep(Duration::from_millis(wait));
        }
    }
}

fn looks_too_long(body: &str) -> bool {
    let lower = body.to_lowercase();
    lower.contains("maximum context length")
        || lower.contains("too long")
        || lower.contains("token limit")
}

#[derive(Deserialize)]
struct EmbeddingResponse {
    data: Vec<EmbeddingDatum>,
}

#[derive(Deserialize)]
struct EmbeddingDatum {
    index: usize,
    embedding: Vec<f32>,
}

fn parse_response(
    response: ureq::Response,
    expected: usize,
    dimension: usize,
) -> Result<Vec<Vec<f32>>, ProviderError> {
    let parsed: EmbeddingResponse = response
        .into_json()
        .map_err(|e| ProviderError::Malformed(e.to_string()))?;
    if parsed.data.len() != expected {
        return Err(ProviderError::Malformed(format!(
            "expected {expected} embeddings, got {}",
            parsed.data.len()
        )));
    }
    let mut out = vec![Vec::new(); expected];
    for datum in parsed.data {
        if datum.index >= expected {
            return Err(ProviderError::Malformed(format!(
                "embedding index {} out of range",
                datum.index
            )));
        }
        if datum.embedding.len() != dimension {
            return Err(ProviderError::Malformed(format!(
                "embedding has dimension {}, expected {dimension}",
                datum.embedding.len()
            )));
        }
        out[datum.index] = datum.embedding;
    }
    Ok(out)
}

impl EmbeddingProvider for RemoteEmbedder {
    fn provider_tag(&self) -> &str {
        &self.tag
    }

    fn dimension(&self) -> usize {
        self.config.dimension
    }

    fn max_input_tokens(&self) -> usize {
        self.config.max_input_tokens
    }

    fn max_batch_size(&self) -> usize {
        self.config.max_batch_size
    }

    fn embed(&self, text: &str) -> Result<Vec<f32>, ProviderError> {
        Ok(self.request(&[text])?.remove(0))
    }

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<Vec<f32>>, ProviderError> {
        if texts.is_empty() {
            return Ok(Vec::new());
        }
        let mut out = Vec::with_capacity(texts.len());
        for chunk in texts.chunks(self.config.max_batch_size.max(1)) {
            out.extend(self.request(chunk)?);
        }
        Ok(out)
    }
}
