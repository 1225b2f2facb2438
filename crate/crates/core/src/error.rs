use thiserror::Error;

/// Errors shared by every quantizer, solver and decoder in the crate.
#[derive(Debug, Error)]
pub enum QmmError {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("singular model: {0}")]
    Singular(String),

    #[error("computation error: {0}")]
    Computation(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl QmmError {
    /// Short machine-readable tag, stable across releases.
    pub fn kind(&self) -> &'static str {
        match self {
            QmmError::Dimension(_) => "dimension",
            QmmError::Parameter(_) => "parameter",
            QmmError::NonFinite { .. } => "non_finite",
            QmmError::Singular(_) => "singular",
            QmmError::Computation(_) => "computation",
            QmmError::Format(_) => "format",
            QmmError::Io(_) => "io",
            QmmError::Json(_) => "json",
        }
    }
}

pub type Result<T> = std::result::Result<T, QmmError>;

pub(crate) fn dim_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(QmmError::Dimension(msg.into()))
}

pub(crate) fn param_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(QmmError::Parameter(msg.into()))
}
