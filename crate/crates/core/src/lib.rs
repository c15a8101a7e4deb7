//! Semantic matching of business-initiative definitions against a
//! job-posting corpus, with consolidation into occupation groups and a
//! typed workforce ontology to hold the results.
//!
//! The pipeline stages map onto the modules:
//!
//! - [`ingest`]: parse posting dumps, deduplicate, cleanse text.
//! - [`embedding`]: turn descriptions and initiative definitions into
//!   unit-norm vectors through a pluggable provider, with a persistent
//!   file cache.
//! - [`matcher`]: exact cosine-similarity ranking with threshold and
//!   top-k filtering.
//! - [`consolidate`]: collapse matched titles into canonical occupation
//!   groups and compute score histograms.
//! - [`ontology`]: the typed entity/relation graph the accepted matches
//!   are committed into.
//! - [`report`]: deterministic file renderings of match output.

pub mod config;
pub mod consolidate;
pub mod embedding;
pub mod ingest;
pub mod matcher;
pub mod ontology;
pub mod report;
