use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid layout: {0}")]
    InvalidLayout(String),

    #[error("invalid treatment: {0}")]
    InvalidTreatment(String),

    #[error("invalid design: {0}")]
    InvalidDesign(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parse error: {0}")]
    Parse(String),

    /// Effects (as printed treatment labels) the design cannot estimate.
    #[error("not estimable: {}", .0.join(", "))]
    NotEstimable(Vec<String>),

    #[error("treatment {0} appears an odd number of times")]
    OddDegree(String),

    #[error("covariance matrix is not positive definite")]
    IndefiniteCovariance,

    #[error("optimizer did not converge: {0}")]
    NonConvergence(String),

    #[error("no design in the search space keeps every effect estimable")]
    EmptySearchSpace,

    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
