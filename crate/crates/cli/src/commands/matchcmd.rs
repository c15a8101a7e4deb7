//! `occumap match`: rank the corpus against every driver query and
//! emit per-driver match, top-group and histogram files.

use std::collections::BTreeMap;

use occumap::consolidate::{consolidate, frequency_distribution, top_n, CompanyLookup};
use occumap::embedding::{cache_key, truncate_to_budget, EmbeddingVector, VectorCache};
use occumap::matcher::{match_all_drivers, flag_out_of_vocabulary, MatchOptions, VectorIndex};
use occumap::report::{flags_to_csv, groups_to_csv, histogram_to_csv, matches_to_jsonl};

use crate::config::RunConfig;
use crate::errors::StageError;

pub const HISTOGRAM_BIN_WIDTH: f64 = 0.01;

#[derive(serde::Serialize)]
struct DriverSummary {
    name: String,
    matches: usize,
    groups: usize,
    flagged: usize,
}

#[derive(serde::Serialize)]
struct MatchSummary {
    postings_indexed: usize,
    postings_without_vectors: usize,
    threshold: f64,
    top_k: usize,
    drivers: BTreeMap<String, DriverSummary>,
    driver_failures: BTreeMap<String, String>,
}

pub fn run(config: &RunConfig) -> Result<(), StageError> {
    let postings = super::load_corpus(config)?;
    let drivers = super::load_drivers(config.drivers_dir()?)?;
    let cache_path = config.cache_path();
    if !cache_path.exists() {
        return Err(StageError::data(format!(
            "vector cache `{}` does not exist (run `occumap embed` first)",
            cache_path.display()
        )));
    }
    let mut cache = VectorCache::open(&cache_path)?;
    let tag = config.provider_tag();
    let budget = config.effective_budget();
    let rules = config.load_rules()?;

    // Assemble the index from cached posting vectors.
    let mut index = VectorIndex::new(tag.clone(), config.dimension);
    let mut companies = CompanyLookup::new();
    let mut missing = 0usize;
    for posting in &postings {
        let key = cache_key(truncate_to_budget(&posting.description, &budget), &tag);
        match cache.get(&key)? {
            Some(values) => {
                let vector = EmbeddingVector::new(values, tag.clone())?;
                index.insert(&posting.posting_id, &posting.title, &vector)?;
                companies.insert(posting.posting_id.clone(), posting.company.clone());
            }
            None => missing += 1,
        }
    }

    // Driver query vectors, also from cache only.
    let mut queries: Vec<(String, EmbeddingVector)> = Vec::new();
    let mut driver_failures: BTreeMap<String, String> = BTreeMap::new();
    for driver in &drivers {
        if driver.definition.is_empty() {
            driver_failures.insert(driver.slug.clone(), "empty definition".into());
            continue;
        }
        let key = cache_key(truncate_to_budget(&driver.definition, &budget), &tag);
        match cache.get(&key)? {
            Some(values) => {
                queries.push((driver.slug.clone(), EmbeddingVector::new(values, tag.clone())?));
            }
            None => {
                driver_failures.insert(
                    driver.slug.clone(),
                    "no cached query vector (run `occumap embed` first)".into(),
                );
            }
        }
    }

    let options = MatchOptions {
        threshold: config.threshold,
        top_k: None,
        per_driver_threshold: config.per_driver_threshold.clone(),
    };
    let (mut results, rank_failures) = match_all_drivers(&queries, &index, &options);
    for (slug, reason) in rank_failures {
        // A provider tag mismatch here means the config changed
        // between stages; surface the first one as a config error.
        if reason.contains("provider mismatch") {
            return Err(StageError::usage(reason));
        }
        driver_failures.insert(slug, reason);
    }

    let mut summaries = BTreeMap::new();
    for driver in &drivers {
        let Some(matches) = results.remove(&driver.slug) else {
            continue;
        };
        let groups = consolidate(&matches, &companies, &rules)?;
        let top = top_n(&groups, config.top_k);
        let histogram = frequency_distribution(&matches, HISTOGRAM_BIN_WIDTH);

        let base = config.out_dir.join(&driver.slug);
        super::write_atomic(
            &base.with_extension("matches.jsonl"),
            matches_to_jsonl(&matches).as_bytes(),
        )?;
        super::write_atomic(&base.with_extension("top10.csv"), groups_to_csv(top)?.as_bytes())?;
        super::write_atomic(
            &base.with_extension("histogram.csv"),
            histogram_to_csv(&histogram)?.as_bytes(),
        )?;
        let mut flagged_count = 0;
        if config.vocab_flags {
            let flagged_ids = flag_out_of_vocabulary(&driver.definition, &matches);
            flagged_count = flagged_ids.len();
            let titles: BTreeMap<String, String> = matches
                .iter()
                .filter(|m| flagged_ids.contains(&m.posting_id))
                .map(|m| (m.posting_id.clone(), m.title.clone()))
                .collect();
            super::write_atomic(&base.with_extension("flags.csv"), flags_to_csv(&titles)?.as_bytes())?;
        }
        summaries.insert(
            driver.slug.clone(),
            DriverSummary {
                name: driver.name.clone(),
                matches: matches.len(),
                groups: groups.len(),
                flagged: flagged_count,
            },
        );
    }

    if !drivers.is_empty() {
        let summary = MatchSummary {
            postings_indexed: index.len(),
            postings_without_vectors: missing,
            threshold: config.threshold,
            top_k: config.top_k,
            drivers: summaries,
            driver_failures: driver_failures.clone(),
        };
        let mut bytes = serde_json::to_vec_pretty(&summary).expect("summary serialization");
        bytes.push(b'\n');
        super::write_atomic(&config.out_dir.join("match_summary.json"), &bytes)?;
    }

    println!(
        "match: {} drivers ranked over {} postings ({} failures)",
        queries.len(),
        index.len(),
        driver_failures.len()
    );
    Ok(())
}
