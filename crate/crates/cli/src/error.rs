use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("missing required column `{0}`")]
    MissingColumn(String),

    #[error("line {line}: sample label `{value}` is not `v` or `rct`")]
    BadLabel { line: usize, value: String },

    #[error("line {line}, column `{column}`: `{value}` is not a number")]
    NonNumeric {
        line: usize,
        column: String,
        value: String,
    },

    #[error("line {line}: treatment `{value}` must be 0 or 1")]
    BadTreatment { line: usize, value: String },

    #[error("line {line}: validation rows must be control (A = 0)")]
    ValidationRowTreated { line: usize },

    #[error("bad term `{term}`: {reason}")]
    BadTerm { term: String, reason: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("dataset is invalid:\n  {0}")]
    InvalidDataset(String),

    #[error("{context}: {source}")]
    Model {
        context: String,
        #[source]
        source: xportme::Error,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }
}

/// Attach context to a library error.
pub trait ModelContext<T> {
    fn context(self, what: &str) -> Result<T, CliError>;
}

impl<T> ModelContext<T> for Result<T, xportme::Error> {
    fn context(self, what: &str) -> Result<T, CliError> {
        self.map_err(|source| CliError::Model {
            context: what.to_string(),
            source,
        })
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
