use thiserror::Error;

/// Errors produced by the kernel, the model layer and the solvers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("singular matrix: pivot {pivot:e} at column {column}")]
    Singular { column: usize, pivot: f64 },

    #[error("no convergence after {iterations} iterations: {what}")]
    NoConvergence { what: String, iterations: usize },

    #[error("size guard exceeded: {0}")]
    SizeGuard(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("model is not stochastic (max row-sum deviation {0:e})")]
    NotStochastic(f64),

    #[error("invalid embedding: {0}")]
    InvalidEmbedding(String),

    #[error("invalid parameters: {0}")]
    InvalidSpec(String),

    #[error("infeasible weights: {0}")]
    Infeasible(String),

    #[error("no root outside the unit disk: {0}")]
    NoRootOutsideDisk(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
