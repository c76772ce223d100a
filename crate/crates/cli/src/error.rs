use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },

    #[error("{}:{line}:{column}: {message}", path.display())]
    Parse { path: PathBuf, line: usize, column: usize, message: String },

    /// A well-formed config with an invalid value; `field` is a JSON path.
    #[error("{field}: {message}")]
    Invalid { field: String, message: String },

    #[error("task {task}: {source}")]
    Task { task: String, source: musielak::Error },

    #[error("task {task}: {message}")]
    TaskFailed { task: String, message: String },

    #[error("thread pool: {0}")]
    Threads(String),
}
