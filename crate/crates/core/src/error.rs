use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid ensemble: {0}")]
    InvalidEnsemble(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid signal set: {0}")]
    InvalidDescriptor(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("alternating projections did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence {
        iterations: usize,
        residual: f64,
        last_iterate: Vec<f64>,
    },

    #[error("unsupported signal set for this program: {0}")]
    Unsupported(String),

    #[error("net budget exceeded: {needed} points required, budget is {budget}; try a larger radius")]
    BudgetExceeded { needed: usize, budget: usize },

    #[error("invalid config at `{path}`: {reason}")]
    Config { path: String, reason: String },

    #[error("schema mismatch in {file}: {reason}")]
    Schema { file: PathBuf, reason: String },

    #[error("{0}")]
    NothingToPlot(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Stable snake_case name of the variant, for machine-readable reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidEnsemble(_) => "invalid_ensemble",
            Error::InvalidParameter { .. } => "invalid_parameter",
            Error::InvalidDescriptor(_) => "invalid_descriptor",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::Precondition(_) => "precondition",
            Error::NonConvergence { .. } => "non_convergence",
            Error::Unsupported(_) => "unsupported",
            Error::BudgetExceeded { .. } => "budget_exceeded",
            Error::Config { .. } => "config",
            Error::Schema { .. } => "schema",
            Error::NothingToPlot(_) => "nothing_to_plot",
            Error::Io { .. } => "io",
            Error::Csv(_) => "csv",
        }
    }

    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub(crate) fn check_dim(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, actual })
    }
}
