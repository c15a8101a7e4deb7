//! Exact cosine-similarity ranking over a flat vector index.
//!
//! The index is a plain scan: every query touches every entry, which
//! is tractable at millions of vectors and keeps results exactly equal
//! to the brute-force definition. Results at or above the threshold
//! come back sorted by score descending with posting-id ties ascending,
//! so identical inputs always produce identical output.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::embedding::EmbeddingVector;

/// Default similarity threshold for retaining a match.
pub const DEFAULT_THRESHOLD: f64 = 0.70;

/// Default number of consolidated groups reported per driver.
pub const DEFAULT_TOP_K: usize = 10;

/// A cosine similarity value in `[-1, 1]` (small floating slack at the
/// bounds).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct SimilarityScore(f64);

impl SimilarityScore {
    const BOUND_SLACK: f64 = 1e-9;

    pub fn new(value: f64) -> Result<Self, MatchError> {
        if !value.is_finite()
            || value < -1.0 - Self::BOUND_SLACK
            || value > 1.0 + Self::BOUND_SLACK
        {
            return Err(MatchError::ScoreOutOfRange(value));
        }
        Ok(Self(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl fmt::Display for SimilarityScore {
    /// Fixed 8-decimal rendering, the form used in output files.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.8}", self.0)
    }
}

#[derive(Debug, Error)]
pub enum MatchError {
    #[error("vectors have different dimensions ({left} vs {right})")]
    DimensionMismatch { left: usize, right: usize },
    #[error("cosine is undefined for a zero vector")]
    ZeroVector,
    #[error("similarity {0} is outside [-1, 1]")]
    ScoreOutOfRange(f64),
    #[error("provider mismatch: index holds `{index}`, query is `{query}`")]
    ProviderMismatch { index: String, query: String },
    #[error("index already contains posting `{0}`")]
    DuplicateEntry(String),
}

/// Cosine similarity, accumulated in f64.
///
/// Stored vectors are unit-norm so this reduces to the dot product,
/// but the general form is computed regardless.
pub fn cosine(u: &EmbeddingVector, v: &EmbeddingVector) -> Result<SimilarityScore, MatchError> {
    cosine_slices(u.values(), v.values())
}

pub(crate) fn cosine_slices(u: &[f32], v: &[f32]) -> Result<SimilarityScore, MatchError> {
    if u.len() != v.len() {
        return Err(MatchError::DimensionMismatch {
            left: u.len(),
            right: v.len(),
        });
    }
    let mut dot = 0.0f64;
    let mut norm_u = 0.0f64;
    let mut norm_v = 0.0f64;
    for (&a, &b) in u.iter().zip(v) {
        let a = a as f64;
        let b = b as f64;
        dot += a * b;
        norm_u += a * a;
        norm_v += b * b;
    }
    if norm_u == 0.0 || norm_v == 0.0 {
        return Err(MatchError::ZeroVector);
    }
    SimilarityScore::new(dot / (norm_u.sqrt() * norm_v.sqrt()))
}

struct IndexEntry {
    posting_id: String,
    title: String,
    values: Vec<f32>,
}

/// Flat index of posting vectors, homogeneous in provider and
/// dimension. Build it once, then query it immutably from any number
/// of threads.
pub struct VectorIndex {
    provider_tag: String,
    dimension: usize,
    entries: Vec<IndexEntry>,
    ids: std::collections::HashSet<String>,
}

impl VectorIndex {
    pub fn new(provider_tag: impl Into<String>, dimension: usize) -> Self {
        Self {
            provider_tag: provider_tag.into(),
            dimension,
            entries: Vec::new(),
            ids: std::collections::HashSet::new(),
        }
    }

    pub fn provider_tag(&self) -> &str {
        &self.provider_tag
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Adds a posting vector, rejecting dimension or provider drift and
    /// duplicate posting ids.
    pub fn insert(
        &mut self,
        posting_id: impl Into<String>,
        title: impl Into<String>,
        vector: &EmbeddingVector,
    ) -> Result<(), MatchError> {
        if vector.provider_tag() != self.provider_tag {
            return Err(MatchError::ProviderMismatch {
                index: self.provider_tag.clone(),
                query: vector.provider_tag().to_string(),
            });
        }
        if vector.dimension() != self.dimension {
            return Err(MatchError::DimensionMismatch {
                left: self.dimension,
                right: vector.dimension(),
            });
        }
        let posting_id = posting_id.into();
        if !self.ids.insert(posting_id.clone()) {
            return Err(MatchError::DuplicateEntry(posting_id));
        }
        self.entries.push(IndexEntry {
            posting_id,
            title: title.into(),
            values: vector.values().to_vec(),
        });
        Ok(())
    }
}

/// A scored posting retained by a ranking pass.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedMatch {
    pub posting_id: String,
    pub title: String,
    pub score: SimilarityScore,
}

/// Scans the whole index and returns every posting scoring at or above
/// `threshold` (inclusive), best first; ties break on ascending posting
/// id. `top_k` truncates the final list.
pub fn rank_matches(
    query: &EmbeddingVector,
    index: &VectorIndex,
    threshold: f64,
    top_k: Option<usize>,
) -> Result<Vec<RankedMatch>, MatchError> {
    if query.provider_tag() != index.provider_tag() {
        return Err(MatchError::ProviderMismatch {
            index: index.provider_tag().to_string(),
            query: query.provider_tag().to_string(),
        });
    }
    if query.dimension() != index.dimension() {
        return Err(MatchError::DimensionMismatch {
            left: index.dimension(),
            right: query.dimension(),
        });
    }
    let mut results = Vec::new();
    for entry in &index.entries {
        let score = cosine_slices(query.values(), &entry.values)?;
        if score.value() >= threshold {
            results.push(RankedMatch {
                posting_id: entry.posting_id.clone(),
                title: entry.title.clone(),
                score,
            });
        }
    }
    results.sort_by(|a, b| {
        b.score
            .value()
            .total_cmp(&a.score.value())
            .then_with(|| a.posting_id.cmp(&b.posting_id))
    });
    if let Some(k) = top_k {
        results.truncate(k);
    }
    Ok(results)
}

/// A retained match attributed to the driver whose query produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchResult {
    pub driver_id: String,
    pub posting_id: String,
    pub title: String,
    pub score: SimilarityScore,
}

/// Ranking controls for a batch of drivers.
#[derive(Debug, Clone)]
pub struct MatchOptions {
    pub threshold: f64,
    pub top_k: Option<usize>,
    /// Per-driver threshold overrides, keyed by driver id.
    pub per_driver_threshold: BTreeMap<String, f64>,
}

impl Default for MatchOptions {
    fn default() -> Self {
        Self {
            threshold: DEFAULT_THRESHOLD,
            top_k: None,
            per_driver_threshold: BTreeMap::new(),
        }
    }
}

impl MatchOptions {
    pub fn threshold_for(&self, driver_id: &str) -> f64 {
        self.per_driver_threshold
            .get(driver_id)
            .copied()
            .unwrap_or(self.threshold)
    }
}

/// Per-driver ranking over one shared index.
///
/// Drivers are independent: a failure (say, a provider mismatch on one
/// query vector) is reported under that driver and the batch continues.
pub fn match_all_drivers(
    queries: &[(String, EmbeddingVector)],
    index: &VectorIndex,
    options: &MatchOptions,
) -> (BTreeMap<String, Vec<MatchResult>>, BTreeMap<String, String>) {
    let mut results = BTreeMap::new();
    let mut failures = BTreeMap::new();
    for (driver_id, query) in queries {
        let threshold = options.threshold_for(driver_id);
        match rank_matches(query, index, threshold, options.top_k) {
            Ok(ranked) => {
                let attributed = ranked
                    .into_iter()
                    .map(|m| MatchResult {
                        driver_id: driver_id.clone(),
                        posting_id: m.posting_id,
                        title: m.title,
                        score: m.score,
                    })
                    .collect();
                results.insert(driver_id.clone(), attributed);
            }
            Err(e) => {
                failures.insert(driver_id.clone(), e.to_string());
            }
        }
    }
    (results, failures)
}

/// Flags matches whose title shares no token with the query vocabulary.
///
/// High-scoring postings can ride on incidental uses of a word (a title
/// like "Quantum Leap Sales" for a quantum-computing query). The flag
/// is advisory; nothing is filtered.
pub fn flag_out_of_vocabulary(query_text: &str, matches: &[MatchResult]) -> Vec<String> {
    let vocabulary: std::collections::BTreeSet<String> =
        crate::embedding::local::embedding_tokens(query_text).collect();
    matches
        .iter()
        .filter(|m| {
            !crate::embedding::local::embedding_tokens(&m.title)
                .any(|token| vocabulary.contains(&token))
        })
        .map(|m| m.posting_id.clone())
        .collect()
}
