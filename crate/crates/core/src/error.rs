use thiserror::Error;

#[derive(Debug, Error)]
pub enum ClsmError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error at row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error("empty dataset")]
    EmptyDataset,

    #[error("configuration error: {0}")]
    Config(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("linear system is numerically singular after {attempts} jittered attempts")]
    Singular { attempts: usize },

    #[error("unsupported model family for this operation: {0}")]
    UnsupportedFamily(String),

    #[error("all {} trials failed: {}", .0.len(), .0.join("; "))]
    AllTrialsFailed(Vec<String>),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

impl ClsmError {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        ClsmError::Config(msg.into())
    }

    /// True for errors caused by invalid user input (bad config, schema, dimensions).
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            ClsmError::Config(_)
                | ClsmError::Dimension { .. }
                | ClsmError::UnsupportedFamily(_)
                | ClsmError::Parse { .. }
                | ClsmError::EmptyDataset
        )
    }
}

pub type Result<T> = std::result::Result<T, ClsmError>;
