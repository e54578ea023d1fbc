use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error at offset {pos}: {msg}")]
    Syntax { pos: usize, msg: String },

    #[error("invalid embedding: {0}")]
    InvalidEmbedding(String),

    #[error("{path}: record {record}: {msg}")]
    Record {
        path: String,
        record: usize,
        msg: String,
    },

    #[error("{path}: {error}")]
    Io { path: PathBuf, error: std::io::Error },

    #[error("fracture estimate {estimate} exceeds cap {cap}")]
    CapExceeded { estimate: u128, cap: u128 },

    #[error("infeasible configuration: {0}")]
    Infeasible(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
