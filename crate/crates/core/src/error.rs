use thiserror::Error;

/// Errors raised by the simulation modules.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum PdcError {
    #[error("frequency {omega} outside validity range [{lo}, {hi}]")]
    OutOfRange { omega: f64, lo: f64, hi: f64 },

    #[error("invalid dispersion model: {0}")]
    InvalidModel(String),

    #[error("evanescent mode: omega = {omega}, |q| = {q} >= k = {k}")]
    Evanescent { omega: f64, q: f64, k: f64 },

    #[error(
        "no phase-matching solution on [{theta_lo}, {theta_hi}] rad \
         (mismatch {mismatch_lo:e} .. {mismatch_hi:e})"
    )]
    NoSolution {
        theta_lo: f64,
        theta_hi: f64,
        mismatch_lo: f64,
        mismatch_hi: f64,
    },

    #[error("ODE step count {steps} below minimum {min}")]
    StepCountTooSmall { steps: usize, min: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T, E = PdcError> = std::result::Result<T, E>;
