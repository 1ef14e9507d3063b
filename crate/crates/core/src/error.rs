use thiserror::Error;

use crate::geometry::FieldError;
use crate::symkernel::{AssumeError, CaseError};

/// Errors raised by diffiety computations.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Case(#[from] CaseError),
    #[error(transparent)]
    Assume(#[from] AssumeError),
    #[error("system is not in resolved form: {0}")]
    NotResolved(String),
    #[error("right-hand side for dependent {dep} references eliminated coordinate {coord}")]
    EliminatedReference { dep: usize, coord: String },
    #[error("no stationarity within the window: {0}")]
    WindowEscalation(String),
    #[error("vector field choice is too special: {0}")]
    NotGeneric(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("rejected: {0}")]
    Rejected(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("certificate failed: {0}")]
    Certificate(String),
}

pub type Result<T> = std::result::Result<T, Error>;
