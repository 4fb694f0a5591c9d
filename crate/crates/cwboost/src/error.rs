use std::path::PathBuf;

use thiserror::Error;

/// Failures of the file formats (CSV datasets, model and truth documents).
#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error("missing target column '{0}'")]
    MissingTarget(String),
    #[error("invalid model document: {0}")]
    Model(String),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Core(#[from] cwboost_core::Error),
}
