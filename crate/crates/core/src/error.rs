use std::path::PathBuf;

use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("{what} did not converge within {max_iter} iterations")]
    IterationLimit { what: &'static str, max_iter: usize },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("non-finite loss at sample {sample}")]
    NonFiniteLoss { sample: usize },

    #[error("training diverged at step {step} (loss {loss})")]
    Divergence { step: usize, loss: f64 },

    #[error("malformed {source_kind} at {field}: {msg}")]
    Format {
        source_kind: &'static str,
        field: String,
        msg: String,
    },

    #[error("labels are constant; Gaussian OCS variance is zero")]
    DegenerateVariance,

    #[error("KL divergence is infinite: sample {sample} puts mass on class {class}, which has zero OCS probability")]
    InfiniteKl { sample: usize, class: usize },

    #[error("insufficient data: {side} side has {have} samples, need at least {need}")]
    InsufficientData {
        side: &'static str,
        have: usize,
        need: usize,
    },

    #[error("train-side expectation is zero at layer {layer}")]
    DegenerateDenominator { layer: usize },

    #[error("no usable samples: {0}")]
    EmptyResult(String),

    #[error("network does not fit the data: sample {index} has margin {margin}")]
    NotFitted { index: usize, margin: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub(crate) fn format(
        source_kind: &'static str,
        field: impl Into<String>,
        msg: impl Into<String>,
    ) -> Self {
        Error::Format {
            source_kind,
            field: field.into(),
            msg: msg.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Wraps the error with a human-readable location such as `seed 3, level 45`.
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// Strips any [`Error::Context`] layers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Context { source, .. } => source.root(),
            other => other,
        }
    }
}
