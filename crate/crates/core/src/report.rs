//! Deterministic renderings of match output: JSONL match files, top-N
//! CSV tables and histogram CSVs. Scores render with exactly eight
//! decimals so reruns diff cleanly.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::consolidate::{Histogram, OccupationGroup};
use crate::matcher::{MatchResult, SimilarityScore};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("match file line {line}: {message}")]
    MatchFile { line: u64, message: String },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

/// Renders matches as one JSON object per line with a fixed key order
/// and 8-decimal scores.
pub fn matches_to_jsonl(matches: &[MatchResult]) -> String {
    let mut out = String::new();
    for m in matches {
        out.push_str(&format!(
            "{{\"driver_id\":{},\"posting_id\":{},\"title\":{},\"score\":{}}}\n",
            json_string(&m.driver_id),
            json_string(&m.posting_id),
            json_string(&m.title),
            m.score
        ));
    }
    out
}

fn json_string(s: &str) -> String {
    serde_json::to_string(s).expect("string serialization")
}

/// Parses a match file written by [`matches_to_jsonl`].
pub fn matches_from_jsonl(text: &str) -> Result<Vec<MatchResult>, ReportError> {
    #[derive(serde::Deserialize)]
    struct Line {
        driver_id: String,
        posting_id: String,
        title: String,
        score: f64,
    }
    let mut matches = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let line_no = i as u64 + 1;
        let parsed: Line = serde_json::from_str(line).map_err(|e| ReportError::MatchFile {
            line: line_no,
            message: e.to_string(),
        })?;
        matches.push(MatchResult {
            driver_id: parsed.driver_id,
            posting_id: parsed.posting_id,
            title: parsed.title,
            score: SimilarityScore::new(parsed.score).map_err(|e| ReportError::MatchFile {
                line: line_no,
                message: e.to_string(),
            })?,
        });
    }
    Ok(matches)
}

/// Rows of `rank,canonical_title,distinct_count,best_score`.
pub fn groups_to_csv(groups: &[OccupationGroup]) -> Result<String, ReportError> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(["rank", "canonical_title", "distinct_count", "best_score"])?;
    for (i, group) in groups.iter().enumerate() {
        writer.write_record([
            (i + 1).to_string(),
            group.canonical_title.clone(),
            group.distinct_count.to_string(),
            group.best_score.to_string(),
        ])?;
    }
    Ok(csv_into_string(writer))
}

/// One parsed row of a top-N CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupRow {
    pub rank: u64,
    pub canonical_title: String,
    pub distinct_count: u64,
    pub best_score: f64,
}

pub fn groups_from_csv(text: &str) -> Result<Vec<GroupRow>, ReportError> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        let field = |i: usize| record.get(i).unwrap_or("").to_string();
        let number = |i: usize| {
            field(i).parse().map_err(|_| ReportError::MatchFile {
                line: rows.len() as u64 + 2,
                message: format!("bad numeric field `{}`", field(i)),
            })
        };
        rows.push(GroupRow {
            rank: number(0)? as u64,
            canonical_title: field(1),
            distinct_count: number(2)? as u64,
            best_score: number(3)?,
        });
    }
    Ok(rows)
}

/// Rows of `bin,count` with the bin label precision derived from the
/// bin width (0.01 renders as two decimals).
pub fn histogram_to_csv(histogram: &Histogram) -> Result<String, ReportError> {
    let decimals = decimals_for(histogram.bin_width());
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(["bin", "count"])?;
    for (lo, count) in histogram.iter() {
        writer.write_record([format!("{lo:.decimals$}"), count.to_string()])?;
    }
    Ok(csv_into_string(writer))
}

pub fn histogram_from_csv(text: &str) -> Result<Vec<(String, u64)>, ReportError> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        let bin = record.get(0).unwrap_or("").to_string();
        let count = record
            .get(1)
            .unwrap_or("")
            .parse()
            .map_err(|_| ReportError::MatchFile {
                line: rows.len() as u64 + 2,
                message: "bad count field".into(),
            })?;
        rows.push((bin, count));
    }
    Ok(rows)
}

fn decimals_for(width: f64) -> usize {
    let mut decimals = 0;
    let mut w = width;
    while w < 0.999_999_9 && decimals < 9 {
        w *= 10.0;
        decimals += 1;
    }
    decimals
}

fn csv_into_string(writer: csv::Writer<Vec<u8>>) -> String {
    String::from_utf8(writer.into_inner().expect("csv flush")).expect("csv output is utf-8")
}

/// Flagged posting ids, one per line, as `posting_id,title`.
pub fn flags_to_csv(flagged: &BTreeMap<String, String>) -> Result<String, ReportError> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(["posting_id", "title"])?;
    for (posting_id, title) in flagged {
        writer.write_record([posting_id, title])?;
    }
    Ok(csv_into_string(writer))
}
