use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("file not found: {0}")]
    MissingFile(PathBuf),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("row {row}, column `{column}`: non-numeric cell `{value}`")]
    NonNumeric {
        row: usize,
        column: String,
        value: String,
    },

    #[error("row {row}: invalid label value `{value}`")]
    InvalidLabel { row: usize, value: String },

    #[error("dataset contains a single class")]
    SingleClass,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("no labeled positives")]
    NoLabeledPositives,

    #[error("dataset too small to stratify: {0}")]
    TooSmall(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("value out of range: {0}")]
    OutOfRange(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("malformed model snapshot: {0}")]
    Snapshot(String),
}
