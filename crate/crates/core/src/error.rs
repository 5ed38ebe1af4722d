use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Two positions that must be separated coincide, so path loss is singular.
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("invalid radio parameters: {0}")]
    InvalidParams(String),

    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    /// A caller broke an operation's precondition.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("schedule failed SINR verification (n={n}, trial={trial}, algo={algo}); topology written to {}", topology.display())]
    VerificationFailed {
        n: usize,
        trial: usize,
        algo: String,
        topology: PathBuf,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn parse(line: u64, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}
