use thiserror::Error;

use crate::socp::SolverStatus;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not Hermitian (max asymmetry {asymmetry:e})")]
    NotHermitian { asymmetry: f64 },

    #[error("matrix is not positive semidefinite (eigenvalue {eigenvalue:e})")]
    NotPositiveSemidefinite { eigenvalue: f64 },

    #[error("eigenvalue iteration did not converge")]
    NoConvergence,

    #[error("covariance matrix is singular or too ill-conditioned (min/max eigenvalue ratio {ratio:e})")]
    SingularCovariance { ratio: f64 },

    #[error("mean channel h0 is (numerically) zero")]
    ZeroMeanChannel,

    #[error("SU channel hs is (numerically) zero")]
    ZeroChannel,

    #[error("hs is not phase-aligned to h0 (imaginary part of h0^H hs is {imag:e})")]
    NotPhaseAligned { imag: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("both-active geometry infeasible: arccos argument {argument} outside [0, {upper}]")]
    InfeasibleGeometry { argument: f64, upper: f64 },

    #[error("both-active angle equation has no root in [{lower}, pi/2]")]
    NoRoot { lower: f64 },

    #[error("SOCP solver did not reach optimality (status {0:?})")]
    NotOptimal(SolverStatus),

    #[error("dimension {n} too large for full-space search (limit {limit})")]
    DimensionTooLarge { n: usize, limit: usize },

    #[error("solution infeasible: {0}")]
    Infeasible(String),

    #[error("I/O error: {0}")]
    Io(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
