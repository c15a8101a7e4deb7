//! Corpus construction: dedup, malformed-record drops and cleansing.

use std::collections::BTreeMap;
use std::collections::HashSet;

use chrono::NaiveDate;
use sha2::{Digest, Sha256};

use super::normalize::normalize_text;
use super::parse::ParseFailure;
use super::{CleanPosting, CorpusStats, RawPostingRecord};

/// Content hash over the normalized title and description.
///
/// Same content always yields the same key, so cross-portal reposts
/// collapse regardless of source ids or URLs. The hex form doubles as
/// the posting id.
pub fn content_key(normalized_title: &str, normalized_description: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(normalized_title.as_bytes());
    hasher.update([0x1f]);
    hasher.update(normalized_description.as_bytes());
    let digest = hasher.finalize();
    let mut hex = String::with_capacity(64);
    for b in digest {
        hex.push_str(&format!("{b:02x}"));
    }
    hex
}

/// Drops records whose content key was already seen, keeping the first
/// occurrence in input order. Idempotent.
pub fn deduplicate(records: Vec<RawPostingRecord>) -> Vec<RawPostingRecord> {
    let mut seen = HashSet::new();
    records
        .into_iter()
        .filter(|r| seen.insert(content_key(&normalize_text(&r.title), &normalize_text(&r.description))))
        .collect()
}

/// Optional corpus selection applied before deduplication.
#[derive(Debug, Clone, Default)]
pub struct IngestFilter {
    /// Keep records whose location contains any of these substrings
    /// (case-insensitive). Empty means no location filtering.
    pub locations: Vec<String>,
    pub date_from: Option<NaiveDate>,
    pub date_to: Option<NaiveDate>,
}

impl IngestFilter {
    pub fn is_empty(&self) -> bool {
        self.locations.is_empty() && self.date_from.is_none() && self.date_to.is_none()
    }

    /// Returns the drop reason, or `None` when the record passes.
    fn rejects(&self, record: &RawPostingRecord) -> Option<&'static str> {
        if !self.locations.is_empty() {
            let loc = record.location.as_deref().unwrap_or("").to_lowercase();
            if !self.locations.iter().any(|want| loc.contains(&want.to_lowercase())) {
                return Some("filtered-location");
            }
        }
        if self.date_from.is_some() || self.date_to.is_some() {
            let Some(date) = record.posted_date else {
                return Some("filtered-date");
            };
            if self.date_from.is_some_and(|from| date < from)
                || self.date_to.is_some_and(|to| date > to)
            {
                return Some("filtered-date");
            }
        }
        None
    }
}

/// Incremental corpus builder.
///
/// Feed parsed records in input order with [`push`](Self::push); each
/// call returns the cleaned posting when the record survives filtering,
/// dedup and the malformed-record drop. State is one seen-key set, so a
/// full dump can stream through without materializing the corpus.
#[derive(Debug, Default)]
pub struct CorpusBuilder {
    filter: IngestFilter,
    seen: HashSet<String>,
    raw_count: u64,
    after_dedup: u64,
    after_drop: u64,
    drop_reasons: BTreeMap<String, u64>,
}

impl CorpusBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_filter(filter: IngestFilter) -> Self {
        Self {
            filter,
            ..Self::default()
        }
    }

    /// Records a parse failure in the drop-reason tally. Failures never
    /// count toward `raw_count`, which covers parsed records only.
    pub fn note_parse_failure(&mut self, failure: &ParseFailure) {
        *self
            .drop_reasons
            .entry(format!("parse:{}", failure.reason))
            .or_insert(0) += 1;
    }

    pub fn push(&mut self, record: RawPostingRecord) -> Option<CleanPosting> {
        self.raw_count += 1;
        if let Some(reason) = self.filter.rejects(&record) {
            self.drop(reason);
            return None;
        }
        let title = normalize_text(&record.title);
        let description = normalize_text(&record.description);
        let key = content_key(&title, &description);
        if !self.seen.insert(key.clone()) {
            self.drop("duplicate");
            return None;
        }
        self.after_dedup += 1;
        if title.is_empty() {
            self.drop("empty-title");
            return None;
        }
        if description.is_empty() {
            self.drop("empty-description");
            return None;
        }
        self.after_drop += 1;
        Some(CleanPosting {
            posting_id: key,
            title,
            description,
            company: record.company,
            location: record.location,
            posted_date: record.posted_date,
            url: record.url,
        })
    }

    fn drop(&mut self, reason: &str) {
        *self.drop_reasons.entry(reason.to_string()).or_insert(0) += 1;
    }

    pub fn stats(&self) -> CorpusStats {
        CorpusStats {
            raw_count: self.raw_count,
            after_dedup_count: self.after_dedup,
            after_malformed_drop_count: self.after_drop,
            drop_reasons: self.drop_reasons.clone(),
        }
    }
}

/// Builds the full corpus in memory: dedup, then malformed-record drop,
/// then normalization, with counting at each step.
pub fn build_corpus(
    records: Vec<RawPostingRecord>,
    failures: &[ParseFailure],
) -> (Vec<CleanPosting>, CorpusStats) {
    let mut builder = CorpusBuilder::new();
    for f in failures {
        builder.note_parse_failure(f);
    }
    let postings = records.into_iter().filter_map(|r| builder.push(r)).collect();
    (postings, builder.stats())
}
