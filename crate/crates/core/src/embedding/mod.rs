//! Embedding vectors, token budgeting, providers and the vector cache.
//!
//! Vectors are stored unit-norm. A provider is any deterministic
//! text-to-vector function behind [`EmbeddingProvider`]; the built-in
//! [`local::LocalHashEmbedder`] needs no network and is the test-time
//! default, while [`remote::RemoteEmbedder`] speaks an HTTP embeddings
//! endpoint. All results flow through the persistent [`VectorCache`],
//! which makes repeated runs cheap and absorbs any provider-side
//! nondeterminism: the first computed vector for a text wins.

pub mod cache;
pub mod local;
pub mod pipeline;
pub mod remote;

use thiserror::Error;

pub use cache::{CacheError, VectorCache};
pub use local::{local_embed, LocalHashEmbedder, DEFAULT_DIMENSION};
pub use pipeline::{embed_corpus, CorpusEmbedReport};
pub use remote::{RemoteConfig, RemoteEmbedder};

/// Norm tolerance for stored vectors.
pub const NORM_TOLERANCE: f64 = 1e-6;

/// Default input-token ceiling.
pub const DEFAULT_MAX_TOKENS: usize = 8192;

/// A fixed-dimension unit-norm vector tagged with its provider.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingVector {
    values: Vec<f32>,
    provider_tag: String,
}

impl EmbeddingVector {
    /// Wraps already-normalized values, verifying the unit-norm
    /// invariant within [`NORM_TOLERANCE`].
    pub fn new(values: Vec<f32>, provider_tag: impl Into<String>) -> Result<Self, EmbedError> {
        if values.is_empty() {
            return Err(EmbedError::InvalidVector("empty vector".into()));
        }
        let norm = norm_f64(&values);
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(EmbedError::InvalidVector(format!(
                "norm {norm} outside unit tolerance"
            )));
        }
        Ok(Self {
            values,
            provider_tag: provider_tag.into(),
        })
    }

    /// Normalizes raw provider output to unit length.
    pub fn from_unnormalized(
        values: Vec<f32>,
        provider_tag: impl Into<String>,
    ) -> Result<Self, EmbedError> {
        if values.is_empty() {
            return Err(EmbedError::InvalidVector("empty vector".into()));
        }
        let norm = norm_f64(&values);
        if norm == 0.0 {
            return Err(EmbedError::ZeroVector);
        }
        let scaled = values.iter().map(|&v| (v as f64 / norm) as f32).collect();
        Ok(Self {
            values: scaled,
            provider_tag: provider_tag.into(),
        })
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn dimension(&self) -> usize {
        self.values.len()
    }

    pub fn provider_tag(&self) -> &str {
        &self.provider_tag
    }
}

fn norm_f64(values: &[f32]) -> f64 {
    values
        .iter()
        .map(|&v| {
            let v = v as f64;
            v * v
        })
        .sum::<f64>()
        .sqrt()
}

/// Input-token ceiling for one embedding request.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TokenBudget {
    pub max_tokens: usize,
}

impl Default for TokenBudget {
    fn default() -> Self {
        Self {
            max_tokens: DEFAULT_MAX_TOKENS,
        }
    }
}

impl TokenBudget {
    pub fn new(max_tokens: usize) -> Self {
        Self { max_tokens }
    }
}

/// Budget tokenizer: a token is a maximal alphanumeric run or a single
/// other non-whitespace character. Counting punctuation separately
/// overestimates subword tokenizers slightly, which keeps truncation on
/// the safe side of a provider's real limit.
pub fn count_tokens(text: &str) -> usize {
    token_spans(text).count()
}

fn token_spans(text: &str) -> impl Iterator<Item = (usize, usize)> + '_ {
    let mut chars = text.char_indices().peekable();
    std::iter::from_fn(move || {
        loop {
            let (start, c) = chars.next()?;
            if c.is_whitespace() {
                continue;
            }
            if !c.is_alphanumeric() {
                return Some((start, start + c.len_utf8()));
            }
            let mut end = start + c.len_utf8();
            while let Some(&(i, n)) = chars.peek() {
                if n.is_alphanumeric() {
                    chars.next();
                    end = i + n.len_utf8();
                } else {
                    break;
                }
            }
            return Some((start, end));
        }
    })
}

/// Cuts `text` to at most `budget.max_tokens` tokens, at a token
/// boundary, keeping the head. Returns the input unchanged when it is
/// already within budget.
pub fn truncate_to_budget<'a>(text: &'a str, budget: &TokenBudget) -> &'a str {
    if budget.max_tokens == 0 {
        return "";
    }
    let mut count = 0;
    let mut end = 0;
    for (_, span_end) in token_spans(text) {
        count += 1;
        end = span_end;
        if count == budget.max_tokens {
            break;
        }
    }
    if count < budget.max_tokens {
        text
    } else {
        // One more token means the input exceeds the budget.
        let total_exceeds = token_spans(text).nth(budget.max_tokens).is_some();
        if total_exceeds {
            &text[..end]
        } else {
            text
        }
    }
}

/// Errors a provider can report for one request.
#[derive(Debug, Error)]
pub enum ProviderError {
    #[error("input produced no tokens to embed")]
    EmptyInput,
    #[error("provider rejected the input as too long")]
    InputTooLong,
    #[error("provider unavailable: {0}")]
    Unavailable(String),
    #[error("provider returned malformed output: {0}")]
    Malformed(String),
}

/// A deterministic text-to-vector function.
///
/// For a fixed `provider_tag` the same input must embed to the same
/// vector; remote nondeterminism is absorbed by the cache.
pub trait EmbeddingProvider: Send + Sync {
    fn provider_tag(&self) -> &str;
    fn dimension(&self) -> usize;
    fn max_input_tokens(&self) -> usize;

    /// Largest batch one `embed_batch` call may carry.
    fn max_batch_size(&self) -> usize {
        64
    }

    fn embed(&self, text: &str) -> Result<Vec<f32>, ProviderError>;

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<Vec<f32>>, ProviderError> {
        texts.iter().map(|t| self.embed(t)).collect()
    }
}

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("input text is empty")]
    EmptyInput,
    #[error("embedding is the zero vector")]
    ZeroVector,
    #[error("invalid vector: {0}")]
    InvalidVector(String),
    #[error("provider unavailable: {0}")]
    ProviderUnavailable(String),
    #[error("provider rejected input as too long even after re-truncation")]
    BudgetTokenizerMismatch,
    #[error(transparent)]
    Cache(#[from] CacheError),
}

/// Cache key for one (text, provider) pair.
pub fn cache_key(text: &str, provider_tag: &str) -> String {
    use sha2::{Digest, Sha256};
    let mut hasher = Sha256::new();
    hasher.update(text.as_bytes());
    let digest = hasher.finalize();
    let mut key = String::with_capacity(64 + 1 + provider_tag.len());
    for b in digest {
        key.push_str(&format!("{b:02x}"));
    }
    key.push(':');
    key.push_str(provider_tag);
    key
}

/// Embeds one text through the cache.
///
/// The text is truncated to the tighter of `budget` and the provider's
/// own limit, then looked up; only a miss reaches the provider. If the
/// provider still reports the input as too long (its tokenizer counts
/// differently), the text is re-truncated 10% tighter and retried once.
pub fn embed_text(
    text: &str,
    provider: &dyn EmbeddingProvider,
    budget: &TokenBudget,
    cache: &mut VectorCache,
) -> Result<EmbeddingVector, EmbedError> {
    if text.trim().is_empty() {
        return Err(EmbedError::EmptyInput);
    }
    let effective = TokenBudget::new(budget.max_tokens.min(provider.max_input_tokens()));
    let truncated = truncate_to_budget(text, &effective);
    let key = cache_key(truncated, provider.provider_tag());
    if let Some(values) = cache.get(&key)? {
        return EmbeddingVector::new(values, provider.provider_tag());
    }
    let vector = embed_uncached(truncated, provider, &effective)?;
    cache.put(&key, vector.values())?;
    Ok(vector)
}

/// Provider call with the over-length retry, no cache involved.
pub(crate) fn embed_uncached(
    truncated: &str,
    provider: &dyn EmbeddingProvider,
    budget: &TokenBudget,
) -> Result<EmbeddingVector, EmbedError> {
    match provider.embed(truncated) {
        Ok(values) => EmbeddingVector::from_unnormalized(values, provider.provider_tag()),
        Err(ProviderError::EmptyInput) => Err(EmbedError::EmptyInput),
        Err(ProviderError::InputTooLong) => {
            let tighter = TokenBudget::new((budget.max_tokens * 9 / 10).max(1));
            let retried = truncate_to_budget(truncated, &tighter);
            match provider.embed(retried) {
                Ok(values) => EmbeddingVector::from_unnormalized(values, provider.provider_tag()),
                Err(ProviderError::InputTooLong) => Err(EmbedError::BudgetTokenizerMismatch),
                Err(ProviderError::EmptyInput) => Err(EmbedError::EmptyInput),
                Err(e) => Err(EmbedError::ProviderUnavailable(e.to_string())),
            }
        }
        Err(e) => Err(EmbedError::ProviderUnavailable(e.to_string())),
    }
}
