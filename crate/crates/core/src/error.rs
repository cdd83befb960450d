use thiserror::Error;

/// Errors produced by the mesh, assembly, spectral and rigidity layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("degenerate triangle {index} (area {area:e}, mean {mean:e})")]
    DegenerateTriangle { index: usize, area: f64, mean: f64 },

    #[error("linear solver failure: {0}")]
    Solver(String),

    #[error("eigensolver did not converge: worst residual {worst_residual:e} over {count} requested pairs")]
    EigenNonConvergence { worst_residual: f64, count: usize },

    #[error("sanity check failed: {0}")]
    Sanity(String),

    #[error("time {0} rejected: spectral evaluation needs t >= 1e-4")]
    InvalidTime(f64),

    #[error("field is not discrete-harmonic (relative residual {0:e})")]
    NotHarmonic(f64),

    #[error("field has a nonzero boundary trace (max {0:e})")]
    NonzeroTrace(f64),

    #[error("ill-conditioned fit: {0}")]
    IllConditioned(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
