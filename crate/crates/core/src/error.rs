use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed profile, out-of-range agent id, or similar caller mistake.
    #[error("invalid input: {0}")]
    Input(String),

    /// An enumeration would exceed its configured cap.
    #[error("{what} requires {required} evaluations, above the cap of {cap}")]
    Resource {
        what: String,
        required: u128,
        cap: u128,
    },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("configuration error: {0}")]
    Configuration(String),

    /// A Markov-chain analysis precondition failed (reducible or periodic chain, ...).
    #[error("analysis error: {0}")]
    Analysis(String),

    #[error("transition {from} -> {to} has zero probability at epsilon {epsilon}")]
    InfeasibleEdge { from: usize, to: usize, epsilon: f64 },

    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: usize,
        message: String,
    },

    #[error("free space is disconnected into {} components: {components:?}", components.len())]
    Disconnected { components: Vec<Vec<(usize, usize)>> },

    #[error("{path}: {source}")]
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
}
