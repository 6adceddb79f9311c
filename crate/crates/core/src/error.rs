use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("enumeration of {requested} classes exceeds the cap of {cap}")]
    EnumerationCap { requested: u64, cap: u64 },

    #[error("random stream keyed for interim {stream} cannot extend a pool at interim {expected}")]
    InvalidStream { stream: usize, expected: usize },

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("empty comparison set")]
    EmptyComparisonSet,

    #[error("test already stopped at interim {0}")]
    AlreadyStopped(usize),

    #[error("missing interim {interim} scores for agent `{agent}`")]
    MissingBatch { agent: String, interim: usize },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("root finding failed at interim {interim}: {detail}")]
    RootFinding { interim: usize, detail: String },

    #[error("insufficient population: {0}")]
    InsufficientPopulation(String),

    #[error("batch has {actual} data rows, expected {expected}")]
    RowCount { expected: usize, actual: usize },

    #[error("non-numeric cell `{value}` at row {row}, column `{column}`")]
    NonNumeric {
        row: usize,
        column: String,
        value: String,
    },

    #[error("non-finite value `{value}` at row {row}, column `{column}`")]
    NonFinite {
        row: usize,
        column: String,
        value: String,
    },

    #[error("unknown agent column `{0}`")]
    UnknownAgent(String),

    #[error("missing agent column `{0}`")]
    MissingAgent(String),

    #[error("duplicate agent column `{0}`")]
    DuplicateAgent(String),

    #[error("malformed csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("state file is corrupt: {0}")]
    CorruptState(String),

    #[error("state checksum mismatch (expected {expected}, found {found})")]
    Integrity { expected: String, found: String },

    #[error("unsupported state version {found} (this build reads version {supported})")]
    Version { found: u64, supported: u64 },

    #[error("state is inconsistent with its recorded decisions: {0}")]
    Inconsistent(String),

    #[error("state file {0} is locked by another process")]
    Locked(PathBuf),

    #[error("scenario: {0}")]
    Scenario(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
