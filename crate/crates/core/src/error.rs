use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("phonon cutoff {cutoff} too small, need at least {required}")]
    InsufficientCutoff { cutoff: usize, required: usize },

    #[error("series overflow: {0}")]
    Overflow(String),

    #[error("step size too large: h*|generator| = {product:.3e} >= {limit}; use at least {suggested_steps} steps")]
    StepSize {
        product: f64,
        limit: f64,
        suggested_steps: usize,
    },

    #[error("sampling too coarse: phase advance {advance:.3} rad per sample is ambiguous")]
    SamplingTooCoarse { advance: f64 },

    #[error("out of scope: {0}")]
    OutOfScope(String),

    #[error("not Hermitian: max |A - A^dagger| = {0:.3e}")]
    NotHermitian(f64),

    #[error("eigensolver failed to converge after {0} iterations")]
    NoConvergence(usize),

    #[error("invalid density matrix: {0}")]
    InvalidState(String),
}

pub type Result<T> = std::result::Result<T, Error>;
