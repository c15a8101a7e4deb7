//! Corpus-scale embedding with cache reuse and bounded parallelism.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering};

use rayon::prelude::*;

use crate::ingest::CleanPosting;

use super::{
    cache_key, embed_uncached, EmbedError, EmbeddingProvider, EmbeddingVector, TokenBudget,
    VectorCache,
};

/// Outcome of one corpus embedding pass.
#[derive(Debug, Default)]
pub struct CorpusEmbedReport {
    /// posting id -> vector, for every posting that embedded.
    pub vectors: BTreeMap<String, EmbeddingVector>,
    /// posting id -> reason, for every posting that did not.
    pub failures: BTreeMap<String, String>,
    /// Provider round-trips made (cache hits cost none).
    pub provider_calls: u64,
}

/// Embeds every posting description, consulting the cache first.
///
/// Misses are batched up to the provider's batch limit and the batches
/// run on a private thread pool of `parallelism` workers; computed
/// vectors are appended to the cache in posting order afterwards, so
/// the cache file bytes do not depend on thread scheduling. Per-posting
/// failures are collected, never fatal to the batch.
pub fn embed_corpus(
    postings: &[CleanPosting],
    provider: &dyn EmbeddingProvider,
    budget: &TokenBudget,
    parallelism: usize,
    cache: &mut VectorCache,
) -> Result<CorpusEmbedReport, EmbedError> {
    let mut report = CorpusEmbedReport::default();
    let effective = TokenBudget::new(budget.max_tokens.min(provider.max_input_tokens()));
    let tag = provider.provider_tag().to_string();

    // Cache pass: resolve hits, queue misses in posting order.
    let mut pending: Vec<(String, String, String)> = Vec::new(); // (posting_id, key, text)
    for posting in postings {
        if posting.description.trim().is_empty() {
            report
                .failures
                .insert(posting.posting_id.clone(), "empty-description".into());
            continue;
        }
        let truncated = super::truncate_to_budget(&posting.description, &effective);
        let key = cache_key(truncated, &tag);
        match cache.get(&key)? {
            Some(values) => {
                report.vectors.insert(
                    posting.posting_id.clone(),
                    EmbeddingVector::new(values, tag.clone())?,
                );
            }
            None => pending.push((posting.posting_id.clone(), key, truncated.to_string())),
        }
    }
    if pending.is_empty() {
        return Ok(report);
    }

    let batch_size = provider.max_batch_size().max(1);
    let batches: Vec<&[(String, String, String)]> = pending.chunks(batch_size).collect();
    let calls = AtomicU64::new(0);

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.max(1))
        .build()
        .map_err(|e| EmbedError::ProviderUnavailable(e.to_string()))?;
    let batch_results: Vec<Vec<Result<EmbeddingVector, EmbedError>>> = pool.install(|| {
        batches
            .par_iter()
            .map(|batch| {
                let texts: Vec<&str> = batch.iter().map(|(_, _, t)| t.as_str()).collect();
                calls.fetch_add(1, Ordering::Relaxed);
                match provider.embed_batch(&texts) {
                    Ok(raw) if raw.len() == texts.len() => raw
                        .into_iter()
                        .map(|values| EmbeddingVector::from_unnormalized(values, tag.clone()))
                        .collect(),
                    // Whole-batch trouble: isolate failures item by item.
                    _ => texts
                        .iter()
                        .map(|t| {
                            calls.fetch_add(1, Ordering::Relaxed);
                            embed_uncached(t, provider, &effective)
                        })
                        .collect(),
                }
            })
            .collect()
    });

    // Single append stream, in posting order.
    for (batch, results) in batches.iter().zip(batch_results) {
        for ((posting_id, key, _), result) in batch.iter().zip(results) {
            match result {
                Ok(vector) => {
                    cache.put(key, vector.values())?;
                    report.vectors.insert(posting_id.clone(), vector);
                }
                Err(e) => {
                    report.failures.insert(posting_id.clone(), e.to_string());
                }
            }
        }
    }
    report.provider_calls = calls.load(Ordering::Relaxed);
    Ok(report)
}
