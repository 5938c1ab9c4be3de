use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: {lhs:?} vs {rhs:?}")]
    Dimension {
        op: &'static str,
        lhs: (usize, usize),
        rhs: (usize, usize),
    },

    #[error("non-finite value in parameter `{param}`")]
    Numeric { param: String },

    #[error("contract violated: {0}")]
    Contract(String),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("invalid {field} in clip `{clip_id}` at frame {frame_index}: {msg}")]
    Validation {
        clip_id: String,
        frame_index: u64,
        field: &'static str,
        msg: String,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("direction `{0}` has no fitted displacement statistics")]
    UnsupportedDirection(String),

    #[error("checkpoint format error: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
