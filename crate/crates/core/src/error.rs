use alloc::string::String;

/// Errors raised by model construction and by the numerical routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("{what} out of range: {value}")]
    OutOfRange { what: &'static str, value: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("matrix is not unimodular (det = {det})")]
    NotUnimodular { det: String },

    #[error("automorphism is not ergodic")]
    NotErgodic,

    #[error("precision budget exceeded: {required} bits needed, cap is {cap}; lower n")]
    PrecisionBudget { required: u64, cap: u64 },

    #[error("path diverged at step {step}: |x| = {norm:e}")]
    Diverged { step: usize, norm: f64 },

    #[error("quantile collision on axis {axis} at refinement index {index}: {value}")]
    QuantileCollision {
        axis: usize,
        index: usize,
        value: f64,
    },

    #[error("point outside the covered region on axis {axis}: {value}")]
    OutsideRegion { axis: usize, value: f64 },

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("budget exceeded: {required} terms required, cap is {cap}")]
    Budget { required: u128, cap: u128 },

    #[error("partition was built from a different model")]
    ModelMismatch,

    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = core::result::Result<T, Error>;
