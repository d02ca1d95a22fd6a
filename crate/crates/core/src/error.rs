use thiserror::Error;

#[derive(Debug, Error)]
pub enum AtgError {
    #[error("structural error: {0}")]
    Structural(String),

    #[error("unknown aspect node `{0}`")]
    UnknownNode(String),

    #[error("unknown feature id {0}")]
    UnknownFeature(usize),

    #[error("parameter domain error for {kind}: {detail}")]
    ParameterDomain { kind: String, detail: String },

    #[error("cannot fit a distribution to an empty sample set")]
    EmptySamples,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    Asymmetric(f64),

    #[error("singular matrix: {0}")]
    Singular(&'static str),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid document: {0}")]
    Document(String),

    #[error("config field `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("insufficient samples: need at least {needed}, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("ground truth did not close after {0} aspects")]
    NotClosed(usize),

    #[error("action kind mismatch: {0}")]
    KindMismatch(String),

    #[error("environment failure: {0}")]
    Environment(String),

    #[error("trial {trial} failed: {source}")]
    Trial {
        trial: usize,
        #[source]
        source: Box<AtgError>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = AtgError> = std::result::Result<T, E>;

impl AtgError {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        AtgError::Config {
            field: field.into(),
            message: message.into(),
        }
    }
}
