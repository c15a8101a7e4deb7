//! Run configuration: flat `key = value` file plus flag overrides.
//!
//! Recognized keys:
//!
//! ```text
//! input = dumps/postings.jsonl      # repeatable; ingest inputs
//! input_format = auto|jsonl|csv
//! field_map = conf/fields.conf
//! drivers_dir = drivers/
//! out_dir = out/
//! rules = conf/rules.conf
//! provider = local|remote
//! dimension = 512
//! max_tokens = 8192
//! threshold = 0.70
//! threshold.<driver-slug> = 0.65    # per-driver override
//! top_k = 10
//! parallelism = 8
//! cache = out/cache.bin
//! remote_endpoint = https://host/v1/embeddings
//! remote_model = model-name
//! embed_failure_fraction = 0.25
//! run_id = r1                       # default derives from match output
//! filter_location = Sydney,London   # optional ingest filters
//! filter_date_from = 2023-03-01
//! filter_date_to = 2023-06-30
//! vocab_flags = true
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use occumap::config::parse_kv;
use occumap::embedding::{
    LocalHashEmbedder, RemoteConfig, RemoteEmbedder, TokenBudget, DEFAULT_DIMENSION,
    DEFAULT_MAX_TOKENS,
};
use occumap::ingest::InputFormat;
use occumap::matcher::{DEFAULT_THRESHOLD, DEFAULT_TOP_K};

use crate::errors::StageError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProviderChoice {
    Local,
    Remote,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub inputs: Vec<PathBuf>,
    pub input_format: Option<InputFormat>,
    pub field_map: Option<PathBuf>,
    pub drivers_dir: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub rules: Option<PathBuf>,
    pub provider: ProviderChoice,
    pub dimension: usize,
    pub max_tokens: usize,
    pub threshold: f64,
    pub per_driver_threshold: BTreeMap<String, f64>,
    pub top_k: usize,
    pub parallelism: usize,
    pub cache: Option<PathBuf>,
    pub remote_endpoint: Option<String>,
    pub remote_model: Option<String>,
    pub embed_failure_fraction: f64,
    pub run_id: Option<String>,
    pub filter_locations: Vec<String>,
    pub filter_date_from: Option<chrono::NaiveDate>,
    pub filter_date_to: Option<chrono::NaiveDate>,
    pub vocab_flags: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            inputs: Vec::new(),
            input_format: None,
            field_map: None,
            drivers_dir: None,
            out_dir: PathBuf::from("out"),
            rules: None,
            provider: ProviderChoice::Local,
            dimension: DEFAULT_DIMENSION,
            max_tokens: DEFAULT_MAX_TOKENS,
            threshold: DEFAULT_THRESHOLD,
            per_driver_threshold: BTreeMap::new(),
            top_k: DEFAULT_TOP_K,
            parallelism: 8,
            cache: None,
            remote_endpoint: None,
            remote_model: None,
            embed_failure_fraction: 0.25,
            run_id: None,
            filter_locations: Vec::new(),
            filter_date_from: None,
            filter_date_to: None,
            vocab_flags: true,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, StageError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            StageError::usage(format!("cannot read config `{}`: {e}", path.display()))
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, StageError> {
        let mut config = Self::default();
        for (line, key, value) in
            parse_kv(text).map_err(|e| StageError::usage(e.to_string()))?
        {
            let bad = |what: &str| {
                StageError::usage(format!("config line {line}: {what} (`{key} = {value}`)"))
            };
            match key.as_str() {
                "input" => config.inputs.push(PathBuf::from(&value)),
                "input_format" => {
                    config.input_format = match value.as_str() {
                        "auto" => None,
                        "jsonl" => Some(InputFormat::JsonLines),
                        "csv" => Some(InputFormat::Csv),
                        _ => return Err(bad("expected auto, jsonl or csv")),
                    }
                }
                "field_map" => config.field_map = Some(PathBuf::from(&value)),
                "drivers_dir" => config.drivers_dir = Some(PathBuf::from(&value)),
                "out_dir" => config.out_dir = PathBuf::from(&value),
                "rules" => config.rules = Some(PathBuf::from(&value)),
                "provider" => {
                    config.provider = match value.as_str() {
                        "local" => ProviderChoice::Local,
                        "remote" => ProviderChoice::Remote,
                        _ => return Err(bad("expected local or remote")),
                    }
                }
                "dimension" => config.dimension = value.parse().map_err(|_| bad("bad integer"))?,
                "max_tokens" => config.max_tokens = value.parse().map_err(|_| bad("bad integer"))?,
                "threshold" => config.threshold = value.parse().map_err(|_| bad("bad number"))?,
                "top_k" => config.top_k = value.parse().map_err(|_| bad("bad integer"))?,
                "parallelism" => {
                    config.parallelism = value.parse().map_err(|_| bad("bad integer"))?
                }
                "cache" => config.cache = Some(PathBuf::from(&value)),
                "remote_endpoint" => config.remote_endpoint = Some(value),
                "remote_model" => config.remote_model = Some(value),
                "embed_failure_fraction" => {
                    config.embed_failure_fraction = value.parse().map_err(|_| bad("bad number"))?
                }
                "run_id" => config.run_id = Some(value),
                "filter_location" => config
                    .filter_locations
                    .extend(value.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty())),
                "filter_date_from" => {
                    config.filter_date_from =
                        Some(value.parse().map_err(|_| bad("expected YYYY-MM-DD"))?)
                }
                "filter_date_to" => {
                    config.filter_date_to =
                        Some(value.parse().map_err(|_| bad("expected YYYY-MM-DD"))?)
                }
                "vocab_flags" => {
                    config.vocab_flags = match value.as_str() {
                        "true" => true,
                        "false" => false,
                        _ => return Err(bad("expected true or false")),
                    }
                }
                other => {
                    if let Some(slug) = other.strip_prefix("threshold.") {
                        let t: f64 = value.parse().map_err(|_| bad("bad number"))?;
                        config.per_driver_threshold.insert(slug.to_string(), t);
                    } else {
                        return Err(StageError::usage(format!(
                            "config line {line}: unknown key `{other}`"
                        )));
                    }
                }
            }
        }
        Ok(config)
    }

    /// Checks the documented invariants; call after all overrides.
    pub fn validate(&self) -> Result<(), StageError> {
        if !(self.threshold > -1.0 && self.threshold <= 1.0) {
            return Err(StageError::usage(format!(
                "threshold {} must be in (-1, 1]",
                self.threshold
            )));
        }
        for (slug, t) in &self.per_driver_threshold {
            if !(*t > -1.0 && *t <= 1.0) {
                return Err(StageError::usage(format!(
                    "threshold.{slug} = {t} must be in (-1, 1]"
                )));
            }
        }
        if self.top_k == 0 {
            return Err(StageError::usage("top_k must be at least 1"));
        }
        if self.max_tokens == 0 {
            return Err(StageError::usage("max_tokens must be at least 1"));
        }
        if self.dimension == 0 {
            return Err(StageError::usage("dimension must be at least 1"));
        }
        if self.parallelism == 0 {
            return Err(StageError::usage("parallelism must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.embed_failure_fraction) {
            return Err(StageError::usage(
                "embed_failure_fraction must be in [0, 1]",
            ));
        }
        if self.provider == ProviderChoice::Remote
            && (self.remote_endpoint.is_none() || self.remote_model.is_none())
        {
            return Err(StageError::usage(
                "remote provider needs remote_endpoint and remote_model",
            ));
        }
        Ok(())
    }

    pub fn cache_path(&self) -> PathBuf {
        self.cache
            .clone()
            .unwrap_or_else(|| self.out_dir.join("cache.bin"))
    }

    pub fn corpus_path(&self) -> PathBuf {
        self.out_dir.join("corpus.jsonl")
    }

    pub fn stats_path(&self) -> PathBuf {
        self.out_dir.join("corpus_stats.json")
    }

    pub fn ontology_path(&self) -> PathBuf {
        self.out_dir.join("ontology.json")
    }

    pub fn review_path(&self) -> PathBuf {
        self.out_dir.join("review.csv")
    }

    pub fn drivers_dir(&self) -> Result<&Path, StageError> {
        self.drivers_dir
            .as_deref()
            .ok_or_else(|| StageError::usage("drivers_dir is not configured"))
    }

    /// Provider tag and effective token budget, without constructing a
    /// client. Stages that only read the cache (match, populate) must
    /// compute the same keys the embed stage wrote.
    pub fn provider_tag(&self) -> String {
        match self.provider {
            ProviderChoice::Local => format!("local-fnv1a64-v1-d{}", self.dimension),
            ProviderChoice::Remote => format!(
                "remote-{}-d{}",
                self.remote_model.as_deref().unwrap_or("unknown"),
                self.dimension
            ),
        }
    }

    pub fn effective_budget(&self) -> TokenBudget {
        let provider_max = match self.provider {
            ProviderChoice::Local => DEFAULT_MAX_TOKENS,
            ProviderChoice::Remote => self.max_tokens,
        };
        TokenBudget::new(self.max_tokens.min(provider_max))
    }

    /// Builds the configured provider client.
    pub fn build_provider(&self) -> Result<Box<dyn occumap::embedding::EmbeddingProvider>, StageError> {
        match self.provider {
            ProviderChoice::Local => Ok(Box::new(LocalHashEmbedder::new(self.dimension))),
            ProviderChoice::Remote => {
                let endpoint = self
                    .remote_endpoint
                    .clone()
                    .ok_or_else(|| StageError::usage("remote_endpoint is not configured"))?;
                let model = self
                    .remote_model
                    .clone()
                    .ok_or_else(|| StageError::usage("remote_model is not configured"))?;
                let mut remote = RemoteConfig::new(endpoint, model, self.dimension);
                remote.max_input_tokens = self.max_tokens;
                let embedder = RemoteEmbedder::new(remote)
                    .map_err(|e| StageError::Provider(e.to_string()))?;
                Ok(Box::new(embedder))
            }
        }
    }

    pub fn load_rules(&self) -> Result<occumap::consolidate::ConsolidationRules, StageError> {
        match &self.rules {
            None => Ok(occumap::consolidate::ConsolidationRules::default()),
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| {
                    StageError::usage(format!("cannot read rules `{}`: {e}", path.display()))
                })?;
                Ok(occumap::consolidate::ConsolidationRules::parse(&text)?)
            }
        }
    }
}
