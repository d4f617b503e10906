use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid config: {0}")]
    Config(String),

    #[error("manifest {code}: {message}")]
    Manifest { code: String, message: String },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid NLI scores: {0}")]
    InvalidScores(String),

    #[error("backend `{backend}`: {message}")]
    Backend { backend: String, message: String },

    #[error("hypothesis slot `{slot}` has no `{language}` translation")]
    MissingTranslation { slot: String, language: String },

    #[error("hypothesis slot `{0}` is not in the catalog")]
    MissingSlot(String),

    #[error("example {id}: no `{language}` translation")]
    MissingExampleTranslation { id: String, language: String },

    #[error("length mismatch: {predictions} predictions vs {gold} gold labels")]
    LengthMismatch { predictions: usize, gold: usize },

    #[error("empty input: {0}")]
    Empty(String),

    #[error("unit mismatch: {0}")]
    UnitMismatch(String),

    #[error("{0}")]
    Serialize(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn backend(backend: impl Into<String>, message: impl std::fmt::Display) -> Self {
        Error::Backend {
            backend: backend.into(),
            message: message.to_string(),
        }
    }

    /// Short, stable identifier for machine-readable error reporting.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Parse { .. } => "parse",
            Error::Io { .. } => "io",
            Error::Config(_) => "config",
            Error::Manifest { .. } => "manifest",
            Error::Precondition(_) => "precondition",
            Error::InvalidScores(_) => "invalid_scores",
            Error::Backend { .. } => "backend",
            Error::MissingTranslation { .. } => "missing_translation",
            Error::MissingSlot(_) => "missing_slot",
            Error::MissingExampleTranslation { .. } => "missing_translation",
            Error::LengthMismatch { .. } => "length_mismatch",
            Error::Empty(_) => "empty_input",
            Error::UnitMismatch(_) => "unit_mismatch",
            Error::Serialize(_) => "serialize",
        }
    }
}
