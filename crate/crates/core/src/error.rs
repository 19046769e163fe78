use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid architecture: {0}")]
    InvalidArchitecture(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("label {label} out of range for {classes} classes")]
    Label { label: usize, classes: usize },

    #[error("non-finite value encountered: {0}")]
    Numeric(String),

    #[error("invalid finite-difference step {0}")]
    InvalidEpsilon(f64),

    #[error("invalid hyperparameter: {0}")]
    Hyperparams(String),

    #[error("wiring error: {0}")]
    Wiring(String),

    #[error("column index {index} out of range ({columns} columns)")]
    ColumnIndex { index: usize, columns: usize },

    #[error("degenerate split: {0}")]
    DegenerateSplit(String),

    #[error("incompatible domains: {0}")]
    IncompatibleDomain(String),

    #[error("{path}: row {row}, column {column}: {message}")]
    Parse {
        path: PathBuf,
        row: usize,
        column: String,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("invalid fold count k = {0} (need k >= 3)")]
    InvalidK(usize),

    #[error("fold index {index} out of range for k = {k}")]
    FoldIndex { index: usize, k: usize },

    #[error("invalid training-fold subset: requested {requested} of {available}")]
    InvalidSubset { requested: usize, available: usize },

    #[error("invalid synthetic config: {0}")]
    SynthConfig(String),

    #[error("empty evaluation: confusion matrix has no counts")]
    EmptyEvaluation,

    #[error("pairing error: {0}")]
    Pairing(String),

    #[error("model format error: {0}")]
    ModelFormat(String),

    #[error("iteration {iteration}, fold {fold}, {strategy}: {source}")]
    Fold {
        iteration: usize,
        fold: usize,
        strategy: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Strips fold context, returning the underlying cause.
    pub fn root(&self) -> &Error {
        match self {
            Error::Fold { source, .. } => source.root(),
            other => other,
        }
    }

    /// True for failures caused by input data rather than configuration or numerics.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self.root(),
            Error::Parse { .. }
                | Error::Io { .. }
                | Error::EmptyInput(_)
                | Error::DegenerateSplit(_)
                | Error::IncompatibleDomain(_)
                | Error::ModelFormat(_)
        )
    }

    pub fn is_numeric_error(&self) -> bool {
        matches!(self.root(), Error::Numeric(_))
    }
}
