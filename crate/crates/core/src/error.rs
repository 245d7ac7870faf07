use std::io;
use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the sampler, the oracles and the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("NaN log ratio produced by move `{0}`")]
    NanLogRatio(&'static str),

    #[error("move `{0}` proposed a state with NaN components")]
    NanState(&'static str),

    #[error("proposal sampler returned a point outside the component space")]
    OutOfSupport,

    #[error("invalid move: {0}")]
    InvalidMove(String),

    #[error("design matrix is numerically singular")]
    Singular,

    #[error("transition matrix row {row} sums to {sum}")]
    RowSum { row: usize, sum: f64 },

    #[error("power iteration did not converge after {0} iterations")]
    NonConvergence(usize),

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("parse error at {path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
