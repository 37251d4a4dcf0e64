use thiserror::Error;

/// Errors raised by the model, solver, spectral and fitting layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("system is unstable: eigenvalue {re:.6e} {im:+.6e}i has non-positive real part")]
    Unstable { re: f64, im: f64 },

    #[error("system matrix is singular at omega = {omega:.6e} rad/s")]
    Singular { omega: f64 },

    #[error("eigensolver failed to converge")]
    EigenConvergence,

    #[error("spectrum index {0} outside 1..=6")]
    IndexOutOfRange(usize),

    #[error(
        "grid too narrow: spectrum edge/peak ratio {ratio:.3e} exceeds tail threshold {threshold:.3e}; widen the grid"
    )]
    GridTooNarrow { ratio: f64, threshold: f64 },

    #[error("invalid frequency grid: {0}")]
    InvalidGrid(String),

    #[error("coldest angle undefined: motion is isotropic")]
    Isotropic,

    #[error("peak seeding found {found} maxima, {wanted} requested")]
    Seeding { found: usize, wanted: usize },

    #[error("not enough data: {0}")]
    InsufficientData(String),

    #[error("trajectory diverged at step {step}")]
    Diverged { step: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
