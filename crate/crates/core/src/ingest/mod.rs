//! Parsing, cleansing and deduplication of job-posting dumps.
//!
//! The module turns heterogeneous dumps (JSON Lines or CSV) into a
//! clean corpus: records stream through one at a time, duplicates
//! collapse on a content key, malformed records are dropped with a
//! counted reason, and the surviving text is normalized for embedding.

mod corpus;
mod normalize;
mod parse;

use std::collections::BTreeMap;
use std::io::Write;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use corpus::{build_corpus, content_key, deduplicate, CorpusBuilder, IngestFilter};
pub use normalize::{is_allowed_char, normalize_text};
pub use parse::{
    collect_postings, parse_posting_stream, FieldMap, InputFormat, ParseFailure, PostingReader,
    StreamItem,
};

/// A scraped job ad as it appears in a dump, before cleansing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawPostingRecord {
    /// Non-empty id, unique within its dump.
    pub source_id: String,
    pub title: String,
    pub description: String,
    pub company: Option<String>,
    pub location: Option<String>,
    pub posted_date: Option<NaiveDate>,
    pub url: Option<String>,
    pub source_portal: Option<String>,
}

/// A cleansed posting, the corpus unit.
///
/// `posting_id` is derived from the normalized content, so identical
/// ads always share an id. Serialized corpus lines carry exactly these
/// fields in this order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleanPosting {
    pub posting_id: String,
    pub title: String,
    pub description: String,
    pub company: Option<String>,
    pub location: Option<String>,
    pub posted_date: Option<NaiveDate>,
    pub url: Option<String>,
}

/// Counters describing one corpus build.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub raw_count: u64,
    pub after_dedup_count: u64,
    pub after_malformed_drop_count: u64,
    pub drop_reasons: BTreeMap<String, u64>,
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("field map line {line}: {message}")]
    FieldMap { line: u64, message: String },
    #[error("corpus line {line}: {message}")]
    Corpus { line: u64, message: String },
}

/// Writes one posting as a single JSON line.
pub fn write_corpus_line<W: Write>(w: &mut W, posting: &CleanPosting) -> Result<(), IngestError> {
    let line = serde_json::to_string(posting)
        .expect("posting serialization is infallible");
    w.write_all(line.as_bytes())?;
    w.write_all(b"\n")?;
    Ok(())
}

/// Reads a corpus file written by [`write_corpus_line`].
pub fn read_corpus<R: std::io::BufRead>(reader: R) -> Result<Vec<CleanPosting>, IngestError> {
    let mut postings = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let posting = serde_json::from_str(&line).map_err(|e| IngestError::Corpus {
            line: i as u64 + 1,
            message: e.to_string(),
        })?;
        postings.push(posting);
    }
    Ok(postings)
}
