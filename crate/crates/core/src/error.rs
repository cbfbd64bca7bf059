use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid on axis x{axis}: {reason}")]
    InvalidGrid { axis: usize, reason: String },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("numerical instability at step {step}: non-finite value at node {node:?}")]
    Instability { step: usize, node: Vec<usize> },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("reference domain too small: half-width {given} must be at least {required} to keep boundary echoes out of the domain until t = {t_end}")]
    Causality {
        given: f64,
        required: f64,
        t_end: f64,
    },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("corrupt snapshot {path}: {reason}")]
    CorruptSnapshot { path: PathBuf, reason: String },

    #[error("eigensolver did not converge for a {dim}x{dim} symbol")]
    EigenNonConvergence { dim: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// Process exit status: 2 for bad input, 3 for a blown-up run, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidGrid { .. }
            | Error::InvalidParameter { .. }
            | Error::Config(_)
            | Error::Causality { .. } => 2,
            Error::Instability { .. } => 3,
            _ => 1,
        }
    }
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
