use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Bad parameters or inputs, detected before any computation.
    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("vertex {index} out of range (graph has {len} vertices)")]
    VertexOutOfRange { index: usize, len: usize },

    #[error("truth method {method} is unavailable for {what}")]
    Unsupported { method: &'static str, what: String },

    #[error("{path}:{line}: {msg}")]
    Parse { path: String, line: u64, msg: String },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    /// Validation errors map to exit status 1, everything else to 2.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Invalid(_)
                | Error::Dimension { .. }
                | Error::VertexOutOfRange { .. }
                | Error::Unsupported { .. }
                | Error::Parse { .. }
                | Error::Config(_)
        )
    }
}
