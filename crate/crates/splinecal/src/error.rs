//! Crate-wide error type.

use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by loading, fitting, and applying calibrators.
#[derive(Debug, Error)]
pub enum CalibError {
    #[error("file not found: {path}")]
    FileNotFound { path: PathBuf },

    #[error("missing column `{column}`")]
    MissingColumn { column: String },

    #[error("row {row}: value {value} outside [0, 1]")]
    ValueOutOfRange { row: usize, value: f64 },

    #[error("row {row}: label `{value}` is not 0 or 1")]
    NonBinaryLabel { row: usize, value: String },

    #[error("row {row}: class label `{value}` does not name a known class")]
    InvalidClassLabel { row: usize, value: String },

    #[error("row {row}: probabilities sum to {sum}, outside [0.99, 1.01]")]
    RowSumOutOfRange { row: usize, sum: f64 },

    #[error("input is empty")]
    EmptyInput,

    #[error("only {distinct} distinct score values; at least 4 are required")]
    TooFewDistinctValues { distinct: usize },

    #[error("row {row}: non-finite input value")]
    NonFiniteInput { row: usize },

    #[error("Newton update became singular and damped-step fallback was exhausted")]
    SingularUpdate,

    #[error("solver did not converge within {max_iters} iterations")]
    NonConvergence { max_iters: usize },

    #[error("fold {fold}: training split does not contain every class")]
    DegenerateFold { fold: usize },

    #[error("score {value} outside the [0, 1] domain")]
    DomainError { value: f64 },

    #[error("every score is exactly 1; epsilon heuristic is undefined")]
    AllScoresAreOne,

    #[error("labels contain a single class; a calibration fit needs both")]
    SingleClassData,

    #[error("class {class} never appears in the labels")]
    MissingClassInLabels { class: usize },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("p_min {p_min} must lie strictly between 0 and 1/{n_classes}")]
    InvalidPMin { p_min: f64, n_classes: usize },

    #[error("calibrator file has schema version {found}; this build supports {supported}")]
    SchemaVersionMismatch { found: u32, supported: u32 },

    #[error("corrupt calibrator file: {reason}")]
    CorruptFile { reason: String },

    #[error("{folds} folds requested but only {n} rows available")]
    TooManyFolds { folds: usize, n: usize },

    #[error("invalid options: {reason}")]
    InvalidOptions { reason: String },

    #[error("trainer failed on fold {fold}: {reason}")]
    TrainerFailure { fold: usize, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, CalibError>;
