use std::path::{Path, PathBuf};

use busflow_core::ParseError;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config {path}: {message}")]
    Config { path: PathBuf, message: String },
    #[error("cannot read {path}: {message}")]
    Input { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    Parse { path: PathBuf, source: ParseError },
    #[error("missing dependency {path}: run `{producer}` first")]
    MissingDependency { path: PathBuf, producer: &'static str },
    #[error("cannot write {path}: {message}")]
    Output { path: PathBuf, message: String },
    #[error(transparent)]
    Core(#[from] busflow_core::Error),
}

impl CliError {
    pub fn config(path: &Path, message: impl Into<String>) -> Self {
        CliError::Config {
            path: path.to_path_buf(),
            message: message.into(),
        }
    }

    pub fn input(path: &Path, e: std::io::Error) -> Self {
        CliError::Input {
            path: path.to_path_buf(),
            message: e.to_string(),
        }
    }

    pub fn output(path: &Path, e: impl ToString) -> Self {
        CliError::Output {
            path: path.to_path_buf(),
            message: e.to_string(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config { .. } => "config",
            CliError::Input { .. } => "input",
            CliError::Parse { .. } => "parse",
            CliError::MissingDependency { .. } => "missing_dependency",
            CliError::Output { .. } => "output",
            CliError::Core(_) => "pipeline",
        }
    }

    fn path(&self) -> Option<&Path> {
        match self {
            CliError::Config { path, .. }
            | CliError::Input { path, .. }
            | CliError::Parse { path, .. }
            | CliError::MissingDependency { path, .. }
            | CliError::Output { path, .. } => Some(path),
            CliError::Core(_) => None,
        }
    }

    pub fn record(&self, command: &str) -> ErrorRecord {
        ErrorRecord {
            status: "error",
            command: command.to_string(),
            kind: self.kind(),
            message: self.to_string(),
            path: self.path().map(|p| p.display().to_string()),
        }
    }
}

/// The single JSON line printed on failure.
#[derive(Debug, Serialize)]
pub struct ErrorRecord {
    pub status: &'static str,
    pub command: String,
    pub kind: &'static str,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
}
