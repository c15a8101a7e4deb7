//! `occumap ingest`: dumps in, clean corpus and stats out.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use occumap::ingest::{
    parse_posting_stream, write_corpus_line, CorpusBuilder, FieldMap, IngestFilter, InputFormat,
    StreamItem,
};

use crate::config::RunConfig;
use crate::errors::StageError;

pub fn run(config: &RunConfig) -> Result<(), StageError> {
    if config.inputs.is_empty() {
        return Err(StageError::usage(
            "no inputs configured; add `input = <path>` lines to the config",
        ));
    }
    let field_map = match &config.field_map {
        None => FieldMap::default(),
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                StageError::usage(format!("cannot read field_map `{}`: {e}", path.display()))
            })?;
            FieldMap::parse(&text)?
        }
    };

    // Resolve formats and open every input before any output exists,
    // so a bad path leaves no partial files behind.
    let mut opened: Vec<(PathBuf, InputFormat, File)> = Vec::new();
    for path in &config.inputs {
        let format = config
            .input_format
            .or_else(|| InputFormat::from_path(path))
            .ok_or_else(|| {
                StageError::usage(format!(
                    "cannot infer format of `{}`; set input_format",
                    path.display()
                ))
            })?;
        let file = File::open(path).map_err(|e| {
            StageError::data(format!("cannot open input `{}`: {e}", path.display()))
        })?;
        opened.push((path.clone(), format, file));
    }

    let filter = IngestFilter {
        locations: config.filter_locations.clone(),
        date_from: config.filter_date_from,
        date_to: config.filter_date_to,
    };
    let mut builder = CorpusBuilder::with_filter(filter);

    let corpus_path = config.corpus_path();
    let tmp_path = corpus_path.with_extension("tmp");
    let guard = TempGuard(tmp_path.clone());
    let mut out = BufWriter::new(File::create(&tmp_path)?);
    let mut parse_failures = 0u64;
    for (path, format, file) in opened {
        for item in parse_posting_stream(file, format, field_map.clone()) {
            match item.map_err(|e| {
                StageError::data(format!("reading `{}`: {e}", path.display()))
            })? {
                StreamItem::Record(record) => {
                    if let Some(posting) = builder.push(record) {
                        write_corpus_line(&mut out, &posting)?;
                    }
                }
                StreamItem::Failure(failure) => {
                    parse_failures += 1;
                    eprintln!(
                        "parse failure in `{}` record {}: {} ({})",
                        path.display(),
                        failure.record_offset,
                        failure.reason,
                        failure.detail
                    );
                    builder.note_parse_failure(&failure);
                }
            }
        }
    }
    out.flush()?;
    drop(out);

    let stats = builder.stats();
    let mut stats_bytes = serde_json::to_vec_pretty(&stats).expect("stats serialization");
    stats_bytes.push(b'\n');
    super::write_atomic(&config.stats_path(), &stats_bytes)?;
    std::fs::rename(&tmp_path, &corpus_path)?;
    std::mem::forget(guard);

    println!(
        "ingest: {} raw, {} after dedup, {} postings written, {} parse failures",
        stats.raw_count, stats.after_dedup_count, stats.after_malformed_drop_count, parse_failures
    );
    Ok(())
}

/// Deletes the temp corpus on early exit.
struct TempGuard(PathBuf);

impl Drop for TempGuard {
    fn drop(&mut self) {
        let _ = std::fs::remove_file(&self.0);
    }
}
