use thiserror::Error;

use crate::catalog::{CatalogError, Flavor, Kernel};
use crate::quad::QuadError;
use crate::special::SpecialFnError;

/// Errors raised by the process-level modules.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
    #[error(transparent)]
    Special(#[from] SpecialFnError),
    #[error("{family} cannot be used in {flavor} flavor: missing {kernel} evaluator")]
    InvalidFlavor { family: String, flavor: Flavor, kernel: Kernel },
    #[error("{family} does not satisfy the conditions of the {flavor} flavor: {detail}")]
    ConditionsNotMet { family: String, flavor: Flavor, detail: String },
    #[error("divergent integral: {0}")]
    Divergent(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("covariance matrix is not positive semidefinite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPositiveSemidefinite { min_eigenvalue: f64 },
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
