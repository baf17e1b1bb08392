//! IO-level error type wrapping the core errors.

use std::path::PathBuf;

use thiserror::Error;

#[derive(Error, Debug)]
pub enum HetforgeError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed file content, with file/line/field context.
    #[error("{file}:{line}: {msg}")]
    Parse { file: PathBuf, line: usize, msg: String },

    #[error("{path}: {msg}")]
    Format { path: PathBuf, msg: String },

    #[error("{path}: unsupported version {found} (expected {expected})")]
    Version { path: PathBuf, found: u32, expected: u32 },

    #[error(transparent)]
    Core(#[from] hetforge_core::Error),

    #[error("{0}")]
    Config(String),
}

pub type Result<T, E = HetforgeError> = std::result::Result<T, E>;

pub(crate) fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> HetforgeError {
    let path = path.into();
    move |source| HetforgeError::Io { path, source }
}
