//! `occumap embed`: fill the vector cache for the corpus and every
//! driver definition. Resumable: cached entries cost nothing.

use std::collections::BTreeMap;

use occumap::embedding::{embed_corpus, embed_text, VectorCache};

use crate::config::RunConfig;
use crate::errors::StageError;

#[derive(serde::Serialize)]
struct EmbedSummary {
    postings_total: usize,
    postings_embedded: usize,
    posting_failures: BTreeMap<String, String>,
    drivers_total: usize,
    driver_vectors: usize,
    driver_failures: BTreeMap<String, String>,
}

pub fn run(config: &RunConfig) -> Result<(), StageError> {
    let postings = super::load_corpus(config)?;
    let drivers = super::load_drivers(config.drivers_dir()?)?;
    let provider = config.build_provider()?;
    let budget = config.effective_budget();
    let mut cache = VectorCache::open(config.cache_path())?;

    let report = embed_corpus(
        &postings,
        provider.as_ref(),
        &budget,
        config.parallelism,
        &mut cache,
    )?;

    let mut driver_vectors = 0usize;
    let mut driver_failures = BTreeMap::new();
    let mut driver_calls = 0u64;
    for driver in &drivers {
        if driver.definition.is_empty() {
            driver_failures.insert(
                driver.slug.clone(),
                "definition file is empty; fill in the definition text".to_string(),
            );
            continue;
        }
        let key = occumap::embedding::cache_key(
            occumap::embedding::truncate_to_budget(&driver.definition, &budget),
            provider.provider_tag(),
        );
        let cached = cache.contains(&key);
        match embed_text(&driver.definition, provider.as_ref(), &budget, &mut cache) {
            Ok(_) => {
                driver_vectors += 1;
                if !cached {
                    driver_calls += 1;
                }
            }
            Err(e) => {
                driver_failures.insert(driver.slug.clone(), e.to_string());
            }
        }
    }
    cache.flush_index()?;

    let summary = EmbedSummary {
        postings_total: postings.len(),
        postings_embedded: report.vectors.len(),
        posting_failures: report.failures.clone(),
        drivers_total: drivers.len(),
        driver_vectors,
        driver_failures: driver_failures.clone(),
    };
    let mut bytes = serde_json::to_vec_pretty(&summary).expect("summary serialization");
    bytes.push(b'\n');
    super::write_atomic(&config.out_dir.join("embed_summary.json"), &bytes)?;

    println!(
        "embed: {} posting vectors ({} failures), {} driver vectors ({} failures), {} provider calls",
        report.vectors.len(),
        report.failures.len(),
        driver_vectors,
        driver_failures.len(),
        report.provider_calls + driver_calls
    );

    if !postings.is_empty() {
        let fraction = report.failures.len() as f64 / postings.len() as f64;
        if fraction > config.embed_failure_fraction {
            let provider_trouble = report
                .failures
                .values()
                .any(|reason| reason.contains("provider"));
            let message = format!(
                "{} of {} postings failed to embed (more than the configured fraction {})",
                report.failures.len(),
                postings.len(),
                config.embed_failure_fraction
            );
            return Err(if provider_trouble {
                StageError::Provider(message)
            } else {
                StageError::Data(message)
            });
        }
    }
    Ok(())
}
