use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied value violated an operation's precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Layout or config document failed validation. `path` is a JSON field path.
    #[error("{path}: {message}")]
    Schema { path: String, message: String },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// The normal system lost rank at the given view (1-based).
    #[error("normal system is singular at view {view} (pivot {pivot:.3e})")]
    Singular { view: usize, pivot: f64 },

    #[error("depth integration has no anchor: {0}")]
    NoAnchor(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {message}", path.display())]
    Format { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Schema {
            path: path.into(),
            message: message.into(),
        }
    }

    /// Whether the failure is numerical (as opposed to a bad input or I/O).
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Singular { .. } | Error::NoAnchor(_))
    }

    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. })
    }
}
