use alloc::string::String;
use alloc::vec::Vec;

use thiserror::Error;

use crate::net::Defect;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite value produced in layer {layer}")]
    NonFinite { layer: usize },

    #[error("network has {} structural defect(s), first: {}", .0.len(), .0[0])]
    InvalidNetwork(Vec<Defect>),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid sparsity pattern: {0}")]
    InvalidPattern(String),

    #[error("matrix is not positive definite: pivot {index} is {pivot}")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    #[error(
        "eigenvalue estimation did not converge after {iterations} iterations \
         (partial estimates: lambda_min ~ {lambda_min}, lambda_max ~ {lambda_max})"
    )]
    NoConvergence {
        lambda_min: f64,
        lambda_max: f64,
        iterations: usize,
    },

    #[error("condition bound {kappa} is too close to 1 for a Chebyshev plan; use the Richardson builder")]
    IllConditionedPlan { kappa: f64 },
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
