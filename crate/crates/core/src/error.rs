use alloc::string::String;

use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("unphysical coherence times: T2 = {t2} us exceeds 2*T1 = {} us", 2.0 * .t1)]
    UnphysicalCoherence { t1: f64, t2: f64 },

    #[error("step size underflow at t = {time} us (step {step:e} us, local error {local_error:e})")]
    StepUnderflow { time: f64, step: f64, local_error: f64 },

    #[error("density-matrix invariant violated at t = {time} us: {what} = {value:e}")]
    InvariantViolation { time: f64, what: &'static str, value: f64 },

    #[error("matrix is singular or numerically rank deficient")]
    SingularMatrix,

    #[error("exponential fit failed: {0}")]
    FitFailed(String),

    #[error("post-selection keeps a fraction {kept_fraction:e} below the usable floor {floor:e}")]
    ConditioningUnusable { kept_fraction: f64, floor: f64 },
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { name, reason: reason.into() }
}
