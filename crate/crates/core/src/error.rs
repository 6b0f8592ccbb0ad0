use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("field is not consistent with its grid: {0}")]
    InconsistentField(String),

    #[error("exact {arity}-linear sum is capped at K <= {cap}, grid has K = {modes}; use the sampled estimator")]
    ArityTooLarge { arity: usize, modes: usize, cap: usize },

    #[error("tuple is off the hyperplane: sum = {sum:e}")]
    OffHyperplane { sum: f64 },

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("non-finite state at t = {time}")]
    NonFinite { time: f64 },

    #[error("C2 calibration failed: {0}")]
    CalibrationFailed(String),

    #[error("smallness condition violated: ||f||_2 = {norm} >= sqrt(2 pi)")]
    SmallnessViolated { norm: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
