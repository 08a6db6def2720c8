use thiserror::Error;

/// Errors raised anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}x{0} vs {1}x{1}")]
    DimensionMismatch(usize, usize),

    #[error("entry count {got} does not match dimension {dim} (expected {expected})")]
    BadShape {
        dim: usize,
        got: usize,
        expected: usize,
    },

    #[error("unknown Pauli axis {0:?}")]
    UnknownAxis(String),

    #[error("unsupported qubit count {0} (expected 2 or 3)")]
    UnsupportedQubits(usize),

    #[error("not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("trace is not 1 (got {0})")]
    InvalidTrace(f64),

    #[error("not positive semi-definite within tolerance {0:e}")]
    NotPsd(f64),

    #[error("probability has imaginary part {0:e} above tolerance")]
    ComplexProbability(f64),

    #[error("zero-probability branch (p = {0:e})")]
    ZeroProbabilityBranch(f64),

    #[error("observables {0} and {1} do not commute")]
    NonCommuting(String, String),

    #[error("invalid context {label}: {reason}")]
    InvalidContext { label: String, reason: String },

    #[error("empty measurement sequence")]
    EmptySequence,

    #[error("value assignment has no entry for {0}")]
    MissingLabel(String),

    #[error("input index {0} outside {{1,2,3}}")]
    InputOutOfRange(u8),

    #[error("inputs ({0},{1},{2}) are not a valid game round")]
    InvalidRound(u8, u8, u8),

    #[error("guessing probability {0} outside (0, 1]")]
    GuessingOutOfRange(f64),

    #[error("no records to estimate from")]
    EmptyRecords,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
