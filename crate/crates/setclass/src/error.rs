use std::path::PathBuf;

/// Convenience alias used throughout the crate.
pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors from the IO layer, wrapping the core validation errors.
#[derive(Debug, thiserror::Error)]
#[non_exhaustive]
pub enum Error {
    /// A core validation or numerical error.
    #[error(transparent)]
    Core(#[from] setclass_core::Error),

    /// Filesystem failure.
    #[error("{path}: {source}")]
    Io {
        /// Path being read or written.
        path: PathBuf,
        /// Underlying error.
        #[source]
        source: std::io::Error,
    },

    /// A file did not parse under the declared format.
    #[error("{path}: {message}")]
    Parse {
        /// Offending file.
        path: PathBuf,
        /// What went wrong, with set and cell location where known.
        message: String,
    },
}

impl Error {
    /// Filesystem error at `path`.
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Parse error in `path`.
    pub fn parse(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            message: message.into(),
        }
    }

    /// True when the error reflects bad configuration rather than a runtime
    /// failure; the CLI maps these to exit code 2.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Core(setclass_core::Error::InvalidConfig(_))
        )
    }
}
