use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("{name} is not positive definite (min eigenvalue {min_eig:.3e})")]
    NotPositiveDefinite { name: String, min_eig: f64 },

    #[error("{0} is singular")]
    Singular(String),

    #[error("unstable closed loop: spectral radius {0:.6}")]
    UnstableClosedLoop(f64),

    #[error("ill-conditioned certificate: condition number {0:.3e}")]
    IllConditioned(f64),

    #[error("iteration did not converge after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("unknown synthesis method `{0}`")]
    UnknownMethod(String),

    #[error("solver returned status {status}: {message}")]
    Solver {
        status: crate::solver::SolveStatus,
        message: String,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
