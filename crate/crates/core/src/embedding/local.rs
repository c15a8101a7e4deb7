//! Built-in deterministic embedder: hashed bag of tokens.
//!
//! Each lowercased alphanumeric token is hashed with FNV-1a (64-bit,
//! standard offset basis and prime, no seed) to pick a dimension index
//! and a contribution sign; token counts accumulate and the result is
//! L2-normalized. No state, no network, identical output on every
//! platform.

use super::{EmbeddingProvider, EmbeddingVector, ProviderError};

pub const DEFAULT_DIMENSION: usize = 512;

const FNV_OFFSET: u64 = 0xcbf29ce484222325;
const FNV_PRIME: u64 = 0x100000001b3;

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h = FNV_OFFSET;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

/// Dimension index and sign for one token.
pub fn token_slot(token: &str, dimension: usize) -> (usize, f64) {
    let h = fnv1a64(token.as_bytes());
    let idx = (h % dimension as u64) as usize;
    let sign = if h & (1 << 63) != 0 { -1.0 } else { 1.0 };
    (idx, sign)
}

/// Lowercased alphanumeric runs; punctuation never reaches the hash.
pub fn embedding_tokens(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(|t| t.to_lowercase())
}

#[derive(Debug, Clone)]
pub struct LocalHashEmbedder {
    dimension: usize,
    tag: String,
}

impl LocalHashEmbedder {
    pub fn new(dimension: usize) -> Self {
        Self {
            dimension,
            tag: format!("local-fnv1a64-v1-d{dimension}"),
        }
    }
}

impl Default for LocalHashEmbedder {
    fn default() -> Self {
        Self::new(DEFAULT_DIMENSION)
    }
}

impl EmbeddingProvider for LocalHashEmbedder {
    fn provider_tag(&self) -> &str {
        &self.tag
    }

    fn dimension(&self) -> usize {
        self.dimension
    }

    fn max_input_tokens(&self) -> usize {
        super::DEFAULT_MAX_TOKENS
    }

    fn embed(&self, text: &str) -> Result<Vec<f32>, ProviderError> {
        let mut acc = vec![0.0f64; self.dimension];
        let mut any = false;
        for token in embedding_tokens(text) {
            let (idx, sign) = token_slot(&token, self.dimension);
            acc[idx] += sign;
            any = true;
        }
        if !any {
            return Err(ProviderError::EmptyInput);
        }
        let norm = acc.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            // Signed counts can cancel exactly; treat like no input.
            return Err(ProviderError::EmptyInput);
        }
        Ok(acc.iter().map(|&v| (v / norm) as f32).collect())
    }
}

/// One-shot embedding with the local provider.
pub fn local_embed(text: &str, dimension: usize) -> Result<EmbeddingVector, super::EmbedError> {
    let embedder = LocalHashEmbedder::new(dimension);
    match embedder.embed(text) {
        Ok(values) => EmbeddingVector::new(values, embedder.provider_tag().to_string()),
        Err(ProviderError::EmptyInput) => Err(super::EmbedError::EmptyInput),
        Err(e) => Err(super::EmbedError::ProviderUnavailable(e.to_string())),
    }
}
