//! Shared helpers for driving the built binary in tests.

use std::path::{Path, PathBuf};
use std::process::Output;

pub const BIN: &str = env!("CARGO_BIN_EXE_occumap");

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

/// Runs the binary with `--config <config>` plus the given arguments.
pub fn run(config: &Path, args: &[&str]) -> Output {
    std::process::Command::new(BIN)
        .args(args)
        .arg("--config")
        .arg(config)
        .output()
        .expect("binary runs")
}

pub fn assert_success(output: &Output, context: &str) {
    assert!(
        output.status.success(),
        "{context} failed with {:?}\nstdout: {}\nstderr: {}",
        output.status.code(),
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
}

/// Writes a pipeline config pointing at the cohort fixture.
pub fn cohort_config(dir: &Path) -> PathBuf {
    let fixtures = fixture_dir().join("cohort");
    write_config(
        dir,
        &format!(
            "input = {}\ndrivers_dir = {}\nout_dir = {}\nthreshold = 0.70\ntop_k = 10\ndimension = 512\nprovider = local\n",
            fixtures.join("corpus.jsonl").display(),
            fixtures.join("drivers").display(),
            dir.join("out").display(),
        ),
    )
}

pub fn write_config(dir: &Path, contents: &str) -> PathBuf {
    let path = dir.join("run.conf");
    std::fs::write(&path, contents).unwrap();
    path
}

/// Marks every proposed link in a review file with `status`.
pub fn set_review_status(review_in: &Path, review_out: &Path, status: &str) {
    let text = std::fs::read_to_string(review_in).unwrap();
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let headers = reader.headers().unwrap().clone();
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(&headers).unwrap();
    for record in reader.records() {
        let record = record.unwrap();
        let mut fields: Vec<String> = record.iter().map(String::from).collect();
        fields[3] = status.to_string();
        writer.write_record(&fields).unwrap();
    }
    std::fs::write(review_out, writer.into_inner().unwrap()).unwrap();
}

/// Byte-compares two directory trees.
pub fn assert_trees_identical(a: &Path, b: &Path) {
    let mut files_a = list_files(a);
    let mut files_b = list_files(b);
    files_a.sort();
    files_b.sort();
    assert_eq!(files_a, files_b, "different file sets under {a:?} and {b:?}");
    for rel in &files_a {
        let bytes_a = std::fs::read(a.join(rel)).unwrap();
        let bytes_b = std::fs::read(b.join(rel)).unwrap();
        assert_eq!(bytes_a, bytes_b, "file {rel:?} differs");
    }
}

fn list_files(root: &Path) -> Vec<PathBuf> {
    walkdir::WalkDir::new(root)
        .into_iter()
        .filter_map(Result::ok)
        .filter(|e| e.file_type().is_file())
        .map(|e| e.path().strip_prefix(root).unwrap().to_path_buf())
        .collect()
}

/// Runs the whole pipeline, accepting every proposed link.
pub fn run_full_pipeline(dir: &Path) -> PathBuf {
    let config = cohort_config(dir);
    for stage in ["ingest", "embed", "match"] {
        assert_success(&run(&config, &[stage]), stage);
    }
    assert_success(&run(&config, &["populate"]), "populate propose");
    let out = dir.join("out");
    let review = out.join("review.csv");
    let accepted = out.join("review_accepted.csv");
    set_review_status(&review, &accepted, "accepted");
    assert_success(
        &run(&config, &["populate", "--review", accepted.to_str().unwrap()]),
        "populate commit",
    );
    assert_success(&run(&config, &["report"]), "report");
    out
}
