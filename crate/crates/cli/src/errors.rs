//! Stage errors classified by exit code: 1 usage/config, 2 data, 3
//! provider.

use std::fmt;

use occumap::consolidate::ConsolidateError;
use occumap::embedding::{CacheError, EmbedError};
use occumap::ingest::IngestError;
use occumap::matcher::MatchError;
use occumap::ontology::OntologyError;
use occumap::report::ReportError;

#[derive(Debug)]
pub enum StageError {
    Usage(String),
    Data(String),
    Provider(String),
}

impl StageError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => 1,
            Self::Data(_) => 2,
            Self::Provider(_) => 3,
        }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Self::Usage(message.into())
    }

    pub fn data(message: impl Into<String>) -> Self {
        Self::Data(message.into())
    }
}

impl fmt::Display for StageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Usage(m) => write!(f, "config error: {m}"),
            Self::Data(m) => write!(f, "data error: {m}"),
            Self::Provider(m) => write!(f, "provider error: {m}"),
        }
    }
}

impl std::error::Error for StageError {}

impl From<IngestError> for StageError {
    fn from(e: IngestError) -> Self {
        match e {
            IngestError::FieldMap { .. } => Self::Usage(e.to_string()),
            _ => Self::Data(e.to_string()),
        }
    }
}

impl From<std::io::Error> for StageError {
    fn from(e: std::io::Error) -> Self {
        Self::Data(e.to_string())
    }
}

impl From<EmbedError> for StageError {
    fn from(e: EmbedError) -> Self {
        match e {
            EmbedError::ProviderUnavailable(_) | EmbedError::BudgetTokenizerMismatch => {
                Self::Provider(e.to_string())
            }
            _ => Self::Data(e.to_string()),
        }
    }
}

impl From<CacheError> for StageError {
    fn from(e: CacheError) -> Self {
        Self::Data(e.to_string())
    }
}

impl From<MatchError> for StageError {
    fn from(e: MatchError) -> Self {
        match e {
            // Mixing providers between stages is a configuration slip.
            MatchError::ProviderMismatch { .. } => Self::Usage(e.to_string()),
            _ => Self::Data(e.to_string()),
        }
    }
}

impl From<OntologyError> for StageError {
    fn from(e: OntologyError) -> Self {
        Self::Data(e.to_string())
    }
}

impl From<ConsolidateError> for StageError {
    fn from(e: ConsolidateError) -> Self {
        match e {
            ConsolidateError::Rules { .. } => Self::Usage(e.to_string()),
            _ => Self::Data(e.to_string()),
        }
    }
}

impl From<ReportError> for StageError {
    fn from(e: ReportError) -> Self {
        Self::Data(e.to_string())
    }
}
