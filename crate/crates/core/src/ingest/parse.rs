//! Streaming readers for job-posting dumps.
//!
//! Two dialects are supported: JSON Lines (one object per line) and
//! RFC-4180 CSV with a header row. Records are yielded one at a time;
//! memory use is bounded by a single record regardless of corpus size.
//! Invalid UTF-8 is replaced, never fatal. A record that cannot be
//! turned into a [`RawPostingRecord`] becomes a [`ParseFailure`] with
//! its offset and reason; only an unreadable stream aborts the iterator.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use chrono::NaiveDate;
use serde_json::Value;

use super::{IngestError, RawPostingRecord};
use crate::config::parse_kv;

/// Input dialect of a posting dump.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputFormat {
    JsonLines,
    Csv,
}

impl InputFormat {
    /// Infers the dialect from a file extension (`.jsonl`/`.json` or `.csv`).
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()? {
            "jsonl" | "json" | "ldjson" => Some(Self::JsonLines),
            "csv" => Some(Self::Csv),
            _ => None,
        }
    }
}

/// Maps the canonical record fields onto source-specific field names.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldMap {
    pub source_id: String,
    pub title: String,
    pub description: String,
    pub company: String,
    pub location: String,
    pub posted_date: String,
    pub url: String,
    pub source_portal: String,
}

impl Default for FieldMap {
    fn default() -> Self {
        Self {
            source_id: "source_id".into(),
            title: "title".into(),
            description: "description".into(),
            company: "company".into(),
            location: "location".into(),
            posted_date: "posted_date".into(),
            url: "url".into(),
            source_portal: "source_portal".into(),
        }
    }
}

impl FieldMap {
    /// Parses a `key = sourceField` mapping file. Unlisted keys keep
    /// their default names; unknown keys are rejected.
    pub fn parse(text: &str) -> Result<Self, IngestError> {
        let mut map = Self::default();
        for (line, key, value) in parse_kv(text).map_err(|e| IngestError::FieldMap {
            line: e.line,
            message: e.message,
        })? {
            let slot = match key.as_str() {
                "source_id" => &mut map.source_id,
                "title" => &mut map.title,
                "description" => &mut map.description,
                "company" => &mut map.company,
                "location" => &mut map.location,
                "posted_date" => &mut map.posted_date,
                "url" => &mut map.url,
                "source_portal" => &mut map.source_portal,
                other => {
                    return Err(IngestError::FieldMap {
                        line,
                        message: format!("unknown field `{other}`"),
                    })
                }
            };
            *slot = value;
        }
        Ok(map)
    }
}

/// A record that could not be parsed, with its position and reason.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseFailure {
    /// 1-based line number (JSONL) or data-record number (CSV).
    pub record_offset: u64,
    /// Stable machine-readable reason, e.g. `missing-field:description`.
    pub reason: String,
    /// Free-text context for logs.
    pub detail: String,
}

impl ParseFailure {
    fn new(offset: u64, reason: impl Into<String>, detail: impl Into<String>) -> Self {
        Self {
            record_offset: offset,
            reason: reason.into(),
            detail: detail.into(),
        }
    }
}

/// One outcome of the stream: a parsed record or a per-record failure.
#[derive(Debug)]
pub enum StreamItem {
    Record(RawPostingRecord),
    Failure(ParseFailure),
}

/// Streaming reader over a posting dump.
pub struct PostingReader<R: Read> {
    inner: ReaderKind<R>,
    offset: u64,
}

enum ReaderKind<R: Read> {
    Json {
        reader: BufReader<R>,
        map: FieldMap,
        buf: Vec<u8>,
    },
    Csv {
        reader: csv::Reader<R>,
        columns: HashMap<String, usize>,
        map: FieldMap,
        header_err: Option<csv::Error>,
    },
}

/// Opens a streaming parse over `input` in the declared `format`.
pub fn parse_posting_stream<R: Read>(
    input: R,
    format: InputFormat,
    map: FieldMap,
) -> PostingReader<R> {
    let inner = match format {
        InputFormat::JsonLines => ReaderKind::Json {
            reader: BufReader::new(input),
            map,
            buf: Vec::new(),
        },
        InputFormat::Csv => {
            let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(input);
            let mut columns = HashMap::new();
            let mut header_err = None;
            match reader.byte_headers() {
                Ok(headers) => {
                    for (i, field) in headers.iter().enumerate() {
                        columns.insert(String::from_utf8_lossy(field).into_owned(), i);
                    }
                }
                Err(e) => header_err = Some(e),
            }
            ReaderKind::Csv {
                reader,
                columns,
                map,
                header_err,
            }
        }
    };
    PostingReader { inner, offset: 0 }
}

/// Drains a stream into separate record and failure sequences.
///
/// Every input record lands in exactly one of the two outputs. Only an
/// unreadable stream returns an error.
pub fn collect_postings<R: Read>(
    input: R,
    format: InputFormat,
    map: FieldMap,
) -> Result<(Vec<RawPostingRecord>, Vec<ParseFailure>), IngestError> {
    let mut records = Vec::new();
    let mut failures = Vec::new();
    for item in parse_posting_stream(input, format, map) {
        match item? {
            StreamItem::Record(r) => records.push(r),
            StreamItem::Failure(f) => failures.push(f),
        }
    }
    Ok((records, failures))
}

impl<R: Read> Iterator for PostingReader<R> {
    type Item = Result<StreamItem, IngestError>;

    fn next(&mut self) -> Option<Self::Item> {
        match &mut self.inner {
            ReaderKind::Json { reader, map, buf } => loop {
                buf.clear();
                match reader.read_until(b'\n', buf) {
                    Ok(0) => return None,
                    Ok(_) => {}
                    Err(e) => return Some(Err(IngestError::Io(e))),
                }
                self.offset += 1;
                let line = String::from_utf8_lossy(buf);
                let line = line.trim();
                if line.is_empty() {
                    continue;
                }
                return Some(Ok(parse_json_line(line, self.offset, map)));
            },
            ReaderKind::Csv {
                reader,
                columns,
                map,
                header_err,
            } => {
                if let Some(e) = header_err.take() {
                    return Some(Err(csv_fatal(e)));
                }
                let mut record = csv::ByteRecord::new();
                match reader.read_byte_record(&mut record) {
                    Ok(false) => None,
                    Ok(true) => {
                        self.offset += 1;
                        Some(Ok(parse_csv_record(&record, self.offset, columns, map)))
                    }
                    Err(e) => {
                        if e.is_io_error() {
                            Some(Err(csv_fatal(e)))
                        } else {
                            self.offset += 1;
                            Some(Ok(StreamItem::Failure(ParseFailure::new(
                                self.offset,
                                "malformed-structure",
                                e.to_string(),
                            ))))
                        }
                    }
                }
            }
        }
    }
}

fn csv_fatal(e: csv::Error) -> IngestError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => IngestError::Io(io),
        other => IngestError::Io(std::io::Error::other(format!("csv: {other:?}"))),
    }
}

fn parse_json_line(line: &str, offset: u64, map: &FieldMap) -> StreamItem {
    let value: Value = match serde_json::from_str(line) {
        Ok(v) => v,
        Err(e) => {
            return StreamItem::Failure(ParseFailure::new(
                offset,
                "malformed-structure",
                e.to_string(),
            ))
        }
    };
    let Value::Object(obj) = value else {
        return StreamItem::Failure(ParseFailure::new(
            offset,
            "malformed-structure",
            "line is not a JSON object",
        ));
    };
    let field = |name: &str| -> Result<Option<String>, ParseFailure> {
        match obj.get(name) {
            None | Some(Value::Null) => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.clone())),
            Some(Value::Number(n)) => Ok(Some(n.to_string())),
            Some(Value::Bool(b)) => Ok(Some(b.to_string())),
            Some(_) => Err(ParseFailure::new(
                offset,
                "malformed-structure",
                format!("field `{name}` is not a scalar"),
            )),
        }
    };
    match build_record(offset, field, map) {
        Ok(record) => StreamItem::Record(record),
        Err(failure) => StreamItem::Failure(failure),
    }
}

fn parse_csv_record(
    record: &csv::ByteRecord,
    offset: u64,
    columns: &HashMap<String, usize>,
    map: &FieldMap,
) -> StreamItem {
    let field = |name: &str| -> Result<Option<String>, ParseFailure> {
        let Some(&idx) = columns.get(name) else {
            return Ok(None);
        };
        match record.get(idx) {
            None => Ok(None),
            Some(bytes) if bytes.is_empty() => Ok(None),
            Some(bytes) => Ok(Some(String::from_utf8_lossy(bytes).into_owned())),
        }
    };
    match build_record(offset, field, map) {
        Ok(record) => StreamItem::Record(record),
        Err(failure) => StreamItem::Failure(failure),
    }
}

fn build_record(
    offset: u64,
    field: impl Fn(&str) -> Result<Option<String>, ParseFailure>,
    map: &FieldMap,
) -> Result<RawPostingRecord, ParseFailure> {
    let require = |name: &str, value: Option<String>| -> Result<String, ParseFailure> {
        value.ok_or_else(|| {
            ParseFailure::new(
                offset,
                format!("missing-field:{name}"),
                format!("required field `{name}` absent or null"),
            )
        })
    };
    let source_id = require("source_id", field(&map.source_id)?)?;
    if source_id.trim().is_empty() {
        return Err(ParseFailure::new(
            offset,
            "empty-field:source_id",
            "source_id must be non-empty",
        ));
    }
    // title and description may be empty strings, but must be present.
    let title = require("title", field(&map.title)?)?;
    let description = require("description", field(&map.description)?)?;
    Ok(RawPostingRecord {
        source_id,
        title,
        description,
        company: field(&map.company)?,
        location: field(&map.location)?,
        posted_date: field(&map.posted_date)?.and_then(|s| parse_date(&s)),
        url: field(&map.url)?,
        source_portal: field(&map.source_portal)?,
    })
}

/// Accepts `YYYY-MM-DD`, optionally followed by a time suffix.
fn parse_date(s: &str) -> Option<NaiveDate> {
    let s = s.trim();
    let head = if s.len() > 10 { &s[..10] } else { s };
    NaiveDate::parse_from_str(head, "%Y-%m-%d").ok()
}
