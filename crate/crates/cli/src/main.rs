//! Pipeline CLI: ingest -> embed -> match -> populate -> report.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use occumap_cli::commands;
use occumap_cli::config::{self, RunConfig};
use occumap_cli::errors::StageError;
use occumap_cli::lock::OutDirLock;

#[derive(Parser)]
#[command(
    name = "occumap",
    version,
    about = "Match business-initiative definitions against a job-posting corpus and populate a workforce ontology"
)]
struct Cli {
    /// Flat key=value configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Similarity threshold override, in (-1, 1].
    #[arg(long, global = true)]
    threshold: Option<f64>,

    /// Consolidated groups reported per driver.
    #[arg(long = "top-k", global = true)]
    top_k: Option<usize>,

    /// Input token ceiling per embedded text.
    #[arg(long = "max-tokens", global = true)]
    max_tokens: Option<usize>,

    /// Embedding provider: local or remote.
    #[arg(long, global = true)]
    provider: Option<String>,

    /// Output directory for every stage.
    #[arg(long = "out-dir", global = true)]
    out_dir: Option<PathBuf>,

    /// Consolidation rules file.
    #[arg(long, global = true)]
    rules: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse posting dumps into a clean, deduplicated corpus.
    Ingest {
        /// Input dump paths; override any `input` keys in the config.
        inputs: Vec<PathBuf>,
    },
    /// Embed corpus descriptions and driver definitions into the cache.
    Embed,
    /// Rank the corpus against each driver and write match reports.
    Match,
    /// Propose ontology links for review, or commit a reviewed file.
    Populate {
        /// Reviewed links file; without it, a proposal file is written.
        #[arg(long)]
        review: Option<PathBuf>,
    },
    /// Render match output as human-readable tables.
    Report,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap's help/version output is not an error.
            if e.use_stderr() {
                eprint!("{e}");
                return ExitCode::from(1);
            }
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<(), StageError> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(threshold) = cli.threshold {
        config.threshold = threshold;
    }
    if let Some(top_k) = cli.top_k {
        config.top_k = top_k;
    }
    if let Some(max_tokens) = cli.max_tokens {
        config.max_tokens = max_tokens;
    }
    if let Some(provider) = &cli.provider {
        config.provider = match provider.as_str() {
            "local" => config::ProviderChoice::Local,
            "remote" => config::ProviderChoice::Remote,
            other => {
                return Err(StageError::usage(format!(
                    "--provider `{other}` is not local or remote"
                )))
            }
        };
    }
    if let Some(out_dir) = &cli.out_dir {
        config.out_dir = out_dir.clone();
    }
    if let Some(rules) = &cli.rules {
        config.rules = Some(rules.clone());
    }
    if let Command::Ingest { inputs } = &cli.command {
        if !inputs.is_empty() {
            config.inputs = inputs.clone();
        }
    }
    config.validate()?;

    let _lock = OutDirLock::acquire(&config.out_dir)?;
    match &cli.command {
        Command::Ingest { .. } => commands::ingest::run(&config),
        Command::Embed => commands::embed::run(&config),
        Command::Match => commands::matchcmd::run(&config),
        Command::Populate { review } => commands::populate::run(&config, review.as_deref()),
        Command::Report => commands::report::run(&config),
    }
}
