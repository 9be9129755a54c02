use std::path::PathBuf;

use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("group `{group}` has {rows} rows, expected {expected}")]
    MisalignedGroup { group: String, rows: usize, expected: usize },

    #[error("non-finite feature in group `{group}` at row {row}, column {col}")]
    NonFiniteFeature { group: String, row: usize, col: usize },

    #[error("label `{0}` is not part of the label space")]
    UnknownLabel(String),

    #[error("class `{0}` has no samples")]
    EmptyClass(String),

    #[error("duplicate identifier `{0}`")]
    Duplicate(String),

    #[error("class `{class}` has {available} samples, split needs {needed}")]
    InsufficientClassPopulation { class: String, needed: usize, available: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("training data contains fewer than two classes")]
    SingleClassData,

    #[error("class `{class}` has {available} samples, fewer than k = {k}")]
    TooFewSamplesPerClass { class: String, available: usize, k: usize },

    #[error("fold count must be at least 2, got {0}")]
    BadK(usize),

    #[error("ensemble needs at least one group")]
    EmptyEnsemble,

    #[error("all concept priorities are zero")]
    AllZeroPriorities,

    #[error("invalid priority {0}")]
    InvalidPriority(f64),

    #[error("group schema mismatch at `{group}`: {reason}")]
    GroupSchemaMismatch { group: String, reason: String },

    #[error("unknown group `{0}`")]
    UnknownGroupName(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("invalid probability vector: {0}")]
    InvalidProbability(String),

    #[error("invalid hyperparameter: {0}")]
    InvalidHyperparameter(String),

    #[error("bad synthetic spec: {0}")]
    BadSpec(String),

    #[error("nothing to evaluate")]
    EmptyEvaluation,

    #[error("invalid split: {0}")]
    BadSplit(String),

    #[error("i/o failure on {path}: {source}")]
    IoFailure {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("model format version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },

    #[error("corrupt model file: {0}")]
    CorruptModel(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
