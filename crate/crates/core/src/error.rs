use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {op}: left {left:?}, right {right:?}")]
    ShapeMismatch {
        op: &'static str,
        left: Vec<usize>,
        right: Vec<usize>,
    },
    #[error("invalid shape {shape:?} for {len} values")]
    InvalidShape { shape: Vec<usize>, len: usize },
    #[error("mask row {row} is fully masked")]
    DegenerateMask { row: usize },
    #[error("mask entry ({row},{col}) is {value}; entries must be 0 or -inf")]
    InvalidMaskEntry { row: usize, col: usize, value: f64 },
    #[error("dropout probability {0} outside [0,1)")]
    InvalidDropout(f64),
    #[error("backward requires a scalar loss, got shape {0:?}")]
    NonScalarLoss(Vec<usize>),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("data validation failed: {0}")]
    DataValidation(String),
    #[error("row {row}: {message}")]
    CsvRow { row: usize, message: String },
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
    #[error("training diverged (loss not finite) at epoch {epoch}, step {step}")]
    Divergence { epoch: usize, step: usize },
    #[error("metric error: {0}")]
    Metric(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
