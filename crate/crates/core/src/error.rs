use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not Hermitian: max |M - M^dagger| = {asymmetry:.3e}")]
    NotHermitian { asymmetry: f64 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid time grid: {0}")]
    InvalidGrid(String),

    #[error("density matrix invariant violated: {0}")]
    InvariantViolation(String),

    #[error("negative discriminant {0:.3e} (input is not Hermitian)")]
    NegativeDiscriminant(f64),

    #[error("boson truncation not converged: entropy drift {drift:.3e} when raising the cutoff by 2")]
    TruncationNotConverged { drift: f64 },

    #[error("too few usable points for regression: {0} (need at least 3)")]
    TooFewPoints(usize),
}

pub type Result<T> = std::result::Result<T, Error>;
