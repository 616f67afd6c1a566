//! Error types shared across the crate.

use thiserror::Error;

/// Errors raised by encoding, linkage, and file-format operations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("column {column:?} not present in header of {path:?}")]
    MissingColumn { column: String, path: String },

    #[error("duplicate record id {id:?}")]
    DuplicateId { id: String },

    #[error("empty record id in row {row}")]
    EmptyId { row: usize },

    #[error("unknown q-gram {gram:?}{}", record.as_ref().map(|r| format!(" (record {r:?})")).unwrap_or_default())]
    UnknownQGram {
        gram: String,
        record: Option<String>,
    },

    #[error("shape mismatch in {context}: expected {expected}, got {actual}")]
    Shape {
        context: String,
        expected: usize,
        actual: usize,
    },

    #[error("training diverged (non-finite value) at iteration {iteration}, batch {batch}")]
    Divergence { iteration: usize, batch: usize },

    #[error("bad magic in {path:?}: expected {expected:?}")]
    BadMagic { path: String, expected: String },

    #[error("truncated file {path:?} while reading {context}")]
    Truncated { path: String, context: String },

    #[error("bit-vector length mismatch: expected l_f = {expected}, got {actual}")]
    LfMismatch { expected: usize, actual: usize },

    #[error("inconsistent inputs: {0}")]
    Inconsistent(String),
}

pub type Result<T> = std::result::Result<T, Error>;
