use std::path::PathBuf;

use thiserror::Error;

use crate::solver::IterationTrace;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// The iteration produced something unusable (degenerate update, non-finite energy,
    /// or failure to converge where convergence was required).
    #[error("solver failure: {message}")]
    Solver {
        message: String,
        trace: Option<Box<IterationTrace>>,
    },

    #[error("config error at `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("malformed snapshot: {0}")]
    Format(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn argument(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub(crate) fn solver(msg: impl Into<String>) -> Self {
        Error::Solver {
            message: msg.into(),
            trace: None,
        }
    }

    pub(crate) fn config(key: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: msg.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Attaches a trace to a solver error; other variants pass through unchanged.
    pub(crate) fn with_trace(self, trace: IterationTrace) -> Self {
        match self {
            Error::Solver { message, .. } => Error::Solver {
                message,
                trace: Some(Box::new(trace)),
            },
            other => other,
        }
    }

    /// The trace carried by a solver error, if any.
    pub fn trace(&self) -> Option<&IterationTrace> {
        match self {
            Error::Solver { trace, .. } => trace.as_deref(),
            _ => None,
        }
    }
}
