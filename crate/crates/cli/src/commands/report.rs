//! `occumap report`: re-render match output as human-readable tables
//! plus one merged histogram file. Pure formatting, no recomputation.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use occumap::report::{groups_from_csv, histogram_from_csv, GroupRow};

use crate::config::RunConfig;
use crate::errors::StageError;

#[derive(serde::Deserialize)]
struct DriverSummary {
    name: String,
}

#[derive(serde::Deserialize)]
struct MatchSummary {
    drivers: BTreeMap<String, DriverSummary>,
}

pub fn run(config: &RunConfig) -> Result<(), StageError> {
    let summary_path = config.out_dir.join("match_summary.json");
    let summary: MatchSummary = serde_json::from_slice(&std::fs::read(&summary_path).map_err(
        |e| {
            StageError::data(format!(
                "cannot read `{}` (run `occumap match` first): {e}",
                summary_path.display()
            ))
        },
    )?)
    .map_err(|e| StageError::data(format!("malformed match summary: {e}")))?;

    let mut report = String::new();
    let mut merged_histogram = csv::Writer::from_writer(Vec::new());
    merged_histogram
        .write_record(["driver", "bin", "count"])
        .map_err(|e| StageError::data(e.to_string()))?;

    for (slug, driver) in &summary.drivers {
        let top_path = config.out_dir.join(format!("{slug}.top10.csv"));
        let rows = groups_from_csv(&std::fs::read_to_string(&top_path).map_err(|e| {
            StageError::data(format!("cannot read `{}`: {e}", top_path.display()))
        })?)?;
        render_table(&mut report, &driver.name, &rows);

        let hist_path = config.out_dir.join(format!("{slug}.histogram.csv"));
        let bins = histogram_from_csv(&std::fs::read_to_string(&hist_path).map_err(|e| {
            StageError::data(format!("cannot read `{}`: {e}", hist_path.display()))
        })?)?;
        for (bin, count) in bins {
            merged_histogram
                .write_record([slug.as_str(), &bin, &count.to_string()])
                .map_err(|e| StageError::data(e.to_string()))?;
        }
    }
    if summary.drivers.is_empty() {
        report.push_str("no drivers were matched.\n");
    }

    super::write_atomic(&config.out_dir.join("report.txt"), report.as_bytes())?;
    let merged = merged_histogram
        .into_inner()
        .map_err(|e| StageError::data(e.to_string()))?;
    super::write_atomic(&config.out_dir.join("histograms.csv"), &merged)?;
    println!("report: {} drivers rendered", summary.drivers.len());
    Ok(())
}

fn render_table(out: &mut String, driver_name: &str, rows: &[GroupRow]) {
    let _ = writeln!(out, "== {driver_name} ==");
    let _ = writeln!(out);
    if rows.is_empty() {
        let _ = writeln!(out, "  no results at the configured threshold.");
        let _ = writeln!(out);
        return;
    }
    let title_width = rows
        .iter()
        .map(|r| r.canonical_title.chars().count())
        .max()
        .unwrap_or(0)
        .max("occupation".len());
    let _ = writeln!(
        out,
        "  {:>4}  {:<title_width$}  {:>8}  {:>10}",
        "rank", "occupation", "distinct", "best score"
    );
    for row in rows {
        let _ = writeln!(
            out,
            "  {:>4}  {:<title_width$}  {:>8}  {:>10.8}",
            row.rank, row.canonical_title, row.distinct_count, row.best_score
        );
    }
    let _ = writeln!(out);
}
