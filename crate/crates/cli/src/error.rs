use std::fmt;
use std::path::Path;

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    /// Malformed or invalid configuration.
    Config,
    /// Unreadable or malformed input artifact.
    Input,
    Io,
    Solver,
}

/// An error reported as one JSON object on standard error.
#[derive(Debug, Clone, Serialize)]
pub struct CliError {
    pub kind: ErrorKind,
    pub message: String,
    /// JSON path (configs) or file path (artifacts) the error refers to.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
}

impl CliError {
    pub fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        CliError {
            kind: ErrorKind::Config,
            message: message.into(),
            path: Some(path.into()),
        }
    }

    pub fn input(path: &Path, message: impl Into<String>) -> Self {
        CliError {
            kind: ErrorKind::Input,
            message: message.into(),
            path: Some(path.display().to_string()),
        }
    }

    pub fn io(path: &Path, err: std::io::Error) -> Self {
        CliError {
            kind: ErrorKind::Io,
            message: err.to_string(),
            path: Some(path.display().to_string()),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind {
            ErrorKind::Config => 2,
            _ => 1,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::json!({ "error": self }).to_string()
    }
}

impl From<hmfg_core::Error> for CliError {
    fn from(e: hmfg_core::Error) -> Self {
        CliError {
            kind: ErrorKind::Solver,
            message: e.to_string(),
            path: None,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.path {
            Some(p) => write!(f, "{}: {}", p, self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for CliError {}
