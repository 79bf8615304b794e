use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not positive definite (pivot {pivot} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("complete separation: |theta| exceeded {limit:e} at iteration {iteration}")]
    Separation { iteration: usize, limit: f64 },

    #[error("IRLS did not converge after {iterations} iterations (gradient max-norm {grad_norm:e})")]
    NotConverged { iterations: usize, grad_norm: f64 },

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("proposal covariance is degenerate: {0}")]
    DegenerateProposal(String),

    #[error("prior `{0}` is improper and cannot be simulated")]
    UnsimulablePrior(&'static str),

    #[error("need at least {needed} draws, got {got}")]
    TooFewDraws { needed: usize, got: usize },

    #[error("evaluation grid is empty or does not cover the draws")]
    EmptyGrid,

    #[error("{path}:{line}:{column}: {reason}")]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        reason: String,
    },

    #[error("{path}: bad header, expected `{expected}`, found `{found}`")]
    Schema {
        path: PathBuf,
        expected: String,
        found: String,
    },

    #[error("{0}: fewer than two data rows")]
    EmptyData(PathBuf),

    #[error("unknown key `{name}`{hint}")]
    UnknownKey { name: String, hint: String },

    #[error("missing required setting `{0}`")]
    MissingRequired(String),

    #[error("setting `{name}`: {reason}")]
    TypeError { name: String, reason: String },

    #[error("{operation}: {source}")]
    Operation {
        operation: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// Tags an error with the operation that produced it.
    pub fn during(self, operation: &'static str) -> Self {
        Error::Operation {
            operation,
            source: Box::new(self),
        }
    }

    /// True for errors caused by user configuration or input files rather
    /// than by a numerical failure.
    pub fn is_config_error(&self) -> bool {
        match self {
            Error::Parse { .. }
            | Error::Schema { .. }
            | Error::EmptyData(_)
            | Error::UnknownKey { .. }
            | Error::MissingRequired(_)
            | Error::TypeError { .. }
            | Error::Io(_) => true,
            Error::Operation { source, .. } => source.is_config_error(),
            _ => false,
        }
    }

    /// Short machine-readable tag for the error variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NotPositiveDefinite { .. } => "not_positive_definite",
            Error::Domain(_) => "domain",
            Error::LengthMismatch { .. } => "length_mismatch",
            Error::Separation { .. } => "separation",
            Error::NotConverged { .. } => "not_converged",
            Error::DegenerateData(_) => "degenerate_data",
            Error::DegenerateProposal(_) => "degenerate_proposal",
            Error::UnsimulablePrior(_) => "unsimulable_prior",
            Error::TooFewDraws { .. } => "too_few_draws",
            Error::EmptyGrid => "empty_grid",
            Error::Parse { .. } => "parse",
            Error::Schema { .. } => "schema",
            Error::EmptyData(_) => "empty_data",
            Error::UnknownKey { .. } => "unknown_key",
            Error::MissingRequired(_) => "missing_required",
            Error::TypeError { .. } => "type_error",
            Error::Operation { source, .. } => source.kind(),
            Error::Io(_) => "io",
        }
    }
}
