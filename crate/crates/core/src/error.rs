//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("undefined relative error: reference sequence is all-zero")]
    UndefinedRelativeError,

    #[error("empty group: histogram has no samples")]
    EmptyGroup,

    #[error("invalid DU {0}: outside [0, 2(b-1)/b]")]
    InvalidDu(f64),

    #[error("mismatched group sets: runs do not cover the same group ids")]
    MismatchedGroups,

    #[error("empty calibration set")]
    EmptyCalibration,

    #[error("missing calibration range for layer {0}")]
    MissingCalibration(usize),

    #[error("dimension mismatch: {0}")]
    DimMismatch(String),

    #[error("input length {len} exceeds crossbar rows {rows}")]
    RowOverflow { len: usize, rows: usize },

    #[error("weight code {0} does not fit the configured weight bitwidth")]
    WeightCodeRange(i64),

    #[error("layer {layer} needs {needed} crossbar arrays but the chip holds {capacity}")]
    ChipCapacity {
        layer: usize,
        needed: usize,
        capacity: usize,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid model: {0}")]
    Model(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code the CLI maps this error to.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::EmptyCalibration | Error::MissingCalibration(_) => 2,
            Error::Model(_) | Error::Io(_) | Error::DimMismatch(_) => 3,
            _ => 1,
        }
    }
}
