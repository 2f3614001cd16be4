use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("agent {agent}: macro-action {macro_id} rejected by its initiation predicate")]
    InitiationRejected { agent: usize, macro_id: usize },

    #[error("agent {agent}: invalid action id {action} (expected < {limit})")]
    InvalidAction {
        agent: usize,
        action: usize,
        limit: usize,
    },

    #[error("dimension mismatch in {what}: expected {expected}, got {actual}")]
    Dimension {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("non-finite gradient in parameter `{0}`")]
    NonFiniteGradient(String),

    #[error("trajectory enumeration exceeds cap of {cap} trajectories")]
    TrajectoryCap { cap: usize },

    #[error("cumulative reward of an empty reward sequence")]
    EmptyRewards,

    #[error("episode records are not contiguous: expected t = {expected}, found t = {found}")]
    RecordGap { expected: usize, found: usize },

    #[error("length mismatch in {what}: {left} vs {right}")]
    LengthMismatch {
        what: &'static str,
        left: usize,
        right: usize,
    },

    #[error("{0}")]
    Invalid(String),

    #[error("checkpoint format error: {0}")]
    Checkpoint(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
