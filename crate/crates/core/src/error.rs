use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum SawsError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite coordinate at index {index}")]
    NonFinite { index: usize },

    #[error("window {k} out of range for period {n} (need 1 <= k <= n-1)")]
    WindowOutOfRange { k: usize, n: usize },

    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("configuration invalid:\n  - {}", .0.join("\n  - "))]
    ConfigInvalid(Vec<String>),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

impl SawsError {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        SawsError::ContractViolation(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        SawsError::Config(msg.into())
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        SawsError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// True for errors that come from validating user configuration.
    pub fn is_config(&self) -> bool {
        matches!(self, SawsError::Config(_) | SawsError::ConfigInvalid(_) | SawsError::Parse(_))
    }
}

pub type Result<T> = std::result::Result<T, SawsError>;
