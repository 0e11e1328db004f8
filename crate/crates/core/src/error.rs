use thiserror::Error;

use crate::barycenter::BarycenterSolution;

/// Errors produced by the matrix routines in this crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is empty")]
    Empty,

    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix has a non-finite entry")]
    NonFinite,

    #[error("matrix is not symmetric (relative asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("matrix is not positive semidefinite (smallest eigenvalue {min_eigenvalue:e}, threshold {threshold:e})")]
    NotPsd { min_eigenvalue: f64, threshold: f64 },

    #[error("matrix is not positive definite (smallest eigenvalue {min_eigenvalue:e}, threshold {threshold:e})")]
    NotPd { min_eigenvalue: f64, threshold: f64 },

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("parameter `{name}` = {value} is outside {range}")]
    ParamOutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("negative discriminant {0:e} in the distance formula")]
    NegativeDiscriminant(f64),

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("empty ensemble")]
    EmptyEnsemble,

    #[error("barycentre iteration did not converge after {} iterations (residual {:e})", .0.iterations, .0.residual)]
    NotConverged(Box<BarycenterSolution>),

    #[error("consistency check failed: {what} (defect {defect:e})")]
    Inconsistent { what: &'static str, defect: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
