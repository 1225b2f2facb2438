use std::fmt::Display;

use qmm_core::error::QmmError;
use serde::Serialize;

/// Failure reported as one JSON line on stderr.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CliError {
    pub kind: String,
    pub message: String,
}

impl CliError {
    pub fn new(kind: impl Into<String>, message: impl Display) -> Self {
        Self {
            kind: kind.into(),
            message: message.to_string(),
        }
    }

    pub fn usage(message: impl Display) -> Self {
        Self::new("usage", message)
    }

    pub fn config(message: impl Display) -> Self {
        Self::new("config", message)
    }

    /// Usage and config problems exit with 2, runtime failures with 1.
    pub fn exit_code(&self) -> i32 {
        match self.kind.as_str() {
            "usage" | "config" => 2,
            _ => 1,
        }
    }

    /// `{"error":{"kind":..,"message":..}}` without newlines.
    pub fn to_json_line(&self) -> String {
        serde_json::json!({ "error": self }).to_string()
    }
}

impl Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.kind, self.message)
    }
}

impl std::error::Error for CliError {}

impl From<QmmError> for CliError {
    fn from(e: QmmError) -> Self {
        Self::new(e.kind(), e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::new("io", e)
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        Self::new("json", e)
    }
}
