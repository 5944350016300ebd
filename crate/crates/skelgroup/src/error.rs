//! Crate-wide error type with a stable mapping to process exit codes.

use std::path::{Path, PathBuf};

/// Unified error for every fallible operation in the crate.
///
/// Variants are grouped by how the CLI reports them: configuration and usage
/// problems, file I/O and format problems, numerical failures, and gradient
/// check failures. [`Error::exit_code`] encodes that grouping.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Invalid configuration value or invalid API usage.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// A dataset failed semantic validation. Contains the full report.
    #[error("invalid dataset:\n{0}")]
    InvalidDataset(String),

    /// Filesystem error while reading or writing `path`.
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A file exists and was read, but its contents do not parse or do not
    /// match the documented layout.
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    /// Tensor or matrix shapes do not line up for `op`.
    #[error("shape mismatch in {op}: {message}")]
    Shape { op: &'static str, message: String },

    /// A gradient contained NaN or infinity.
    #[error("non-finite gradient in {tensor}")]
    NonFiniteGradient { tensor: String },

    /// The training loss became NaN or infinite.
    #[error("non-finite loss at epoch {epoch}")]
    NonFiniteLoss { epoch: usize },

    /// An iterative numerical routine did not converge.
    #[error("{routine} did not converge after {iters} iterations")]
    NoConvergence { routine: &'static str, iters: usize },

    /// Every actor in a clip is masked out, so pooling is undefined.
    #[error("clip {clip_id}: all actors are masked out")]
    AllActorsMasked { clip_id: String },

    /// A gradient check exceeded its tolerance.
    #[error("gradient check failed: {0}")]
    GradCheck(String),
}

impl Error {
    /// Convenience constructor for I/O errors with path context.
    pub fn io(path: impl AsRef<Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().to_path_buf(),
            source,
        }
    }

    /// Convenience constructor for file format errors with path context.
    pub fn format(path: impl AsRef<Path>, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.as_ref().to_path_buf(),
            message: message.into(),
        }
    }

    /// Process exit code for this error: 1 for configuration or usage
    /// errors, 2 for I/O and file format errors, 3 for numerical failures,
    /// 4 for gradient check failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidDataset(_) | Error::Shape { .. } => 1,
            Error::Io { .. } | Error::Format { .. } => 2,
            Error::NonFiniteGradient { .. }
            | Error::NonFiniteLoss { .. }
            | Error::NoConvergence { .. }
            | Error::AllActorsMasked { .. } => 3,
            Error::GradCheck(_) => 4,
        }
    }
}
