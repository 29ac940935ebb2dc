use thiserror::Error;

use crate::spd::SpdMatrix;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("length mismatch: {what} has {found} entries, expected {expected}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("matrix is not positive definite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix has non-finite entries")]
    NonFinite,

    #[error("{function} is undefined at eigenvalue {eigenvalue:e}")]
    Domain {
        function: String,
        eigenvalue: f64,
    },

    #[error("symmetric eigensolver did not converge for a {dim}x{dim} matrix")]
    EigenNonConvergence { dim: usize },

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{method} did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence {
        method: &'static str,
        iterations: usize,
        residual: f64,
        last: Box<SpdMatrix>,
    },

    #[error("representing function {name}: stored derivative {stored} disagrees with finite difference {numeric}")]
    InconsistentDerivative {
        name: String,
        stored: f64,
        numeric: f64,
    },

    #[error("unknown property `{0}` (expected P1..P10)")]
    UnknownProperty(String),

    #[error("evaluation failed at simplex node {index} {weights:?}: {source}")]
    AtNode {
        index: usize,
        weights: Vec<f64>,
        #[source]
        source: Box<Error>,
    },

    #[error("evaluation failed at lambda = {lambda:e}: {source}")]
    AtLambda {
        lambda: f64,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True when the error (or the error it wraps) is an iterative solver failure.
    pub fn is_non_convergence(&self) -> bool {
        match self {
            Error::NonConvergence { .. } | Error::EigenNonConvergence { .. } => true,
            Error::AtNode { source, .. } | Error::AtLambda { source, .. } => {
                source.is_non_convergence()
            }
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
