use thiserror::Error;

/// Errors surfaced by the library. Numerical routines prefer returning a
/// diagnostic over silently clamping or guessing.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("matrix is not Hermitian (max deviation {max_deviation:.3e})")]
    NotHermitian { max_deviation: f64 },

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:.3e})")]
    NotPositiveSemidefinite { min_eigenvalue: f64 },

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("transform argument collides with the spectrum: {0}")]
    SpectrumCollision(String),

    #[error("value outside attainable range: {0}")]
    OutOfRange(String),

    #[error(
        "fixed-point solver did not converge after {iterations} iterations \
         (last residual {residual:.3e})"
    )]
    SolverDidNotConverge { iterations: usize, residual: f64 },

    #[error("solution has not converged; refusing to evaluate")]
    UnconvergedSolution,
}

pub type Result<T> = std::result::Result<T, Error>;
