//! Crate-wide error type.

use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by wavefield I/O, the simulator, and the solvers.
#[derive(Debug, Error)]
pub enum Error {
    /// A binary file header is malformed; `field` names the offending entry.
    #[error("malformed {kind} file: field `{field}`: {detail}")]
    Format {
        kind: &'static str,
        field: &'static str,
        detail: String,
    },

    /// A binary payload is shorter than its header promises.
    #[error("truncated {kind} file: expected {expected} bytes of payload, found {found}")]
    Truncated {
        kind: &'static str,
        expected: u64,
        found: u64,
    },

    /// A caller-supplied argument violates a precondition.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// A value violates a structural invariant (non-finite data, bad dims).
    #[error("invariant violated: {0}")]
    Invariant(String),

    /// The requested time step exceeds the explicit-scheme stability bound.
    #[error("unstable time step dt={dt:.3e}s: maximum admissible dt is {dt_max:.3e}s")]
    Unstable { dt: f64, dt_max: f64 },

    /// Pipeline configuration failed validation; all violations are listed.
    #[error("invalid configuration:\n{}", .0.join("\n"))]
    Config(Vec<String>),

    /// A pipeline stage failed; wraps the underlying error with the stage name.
    #[error("{stage} stage failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
