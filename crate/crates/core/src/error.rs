use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the solver, the certification routines and the I/O layer.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("proximal step must be positive, got {0}")]
    NonPositiveStep(f64),

    #[error("point lies outside the domain (displacement {displacement:.3e})")]
    OutsideDomain { displacement: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("missing metadata: {0}")]
    MissingMetadata(String),

    #[error("unsupported regularizer structure: {0}")]
    UnsupportedRegularizer(&'static str),

    #[error("line search did not accept a step within {0} proximal gradient steps")]
    LineSearchFailed(u64),

    #[error("iteration cap of {0} exceeded")]
    IterationCap(usize),

    #[error("all {0} samples are feasible; the non-singularity ratio is undefined")]
    AllSamplesFeasible(usize),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::InvalidConfig(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
