use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("truncation error: tail mass {tail_mass:.3e} exceeds {limit:.1e} at cutoff {cutoff}; retry with cutoff {suggested_cutoff}")]
    Truncation {
        tail_mass: f64,
        limit: f64,
        cutoff: usize,
        suggested_cutoff: usize,
    },

    #[error("phase-space domain too small: boundary |W| = {boundary:.3e}")]
    DomainTooSmall { boundary: f64 },

    #[error("integration did not converge: {0}")]
    Integration(String),

    #[error("no root found: {0}")]
    NoRoot(String),

    #[error("channel violates the physicality condition (min eigenvalue {min_eigenvalue:.3e})")]
    ConstraintViolation { min_eigenvalue: f64 },

    #[error("overlap kernel is singular at gamma = {0}")]
    SingularKernel(f64),

    #[error("degenerate post-selection (probability {0:.3e})")]
    DegeneratePostselection(f64),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
