use std::path::PathBuf;

use crate::tree::LinkId;

pub type Result<T, E = SfnError> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum SfnError {
    #[error("non-finite value while evaluating link {link}")]
    NonFiniteResult { link: LinkId },

    #[error("link would sit at depth {depth}, model allows at most {max_depth}")]
    DepthExceeded { depth: usize, max_depth: usize },

    #[error("no link {0} to attach a child to")]
    InvalidParent(LinkId),

    #[error("unknown link {0}")]
    UnknownLink(LinkId),

    #[error("baseline input x{index} out of range for a model with {arity} inputs")]
    InvalidBaseline { index: usize, arity: usize },

    #[error("weights do not match the function kind: {0}")]
    InvalidWeights(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("trace does not belong to this model: {0}")]
    TraceMismatch(String),

    #[error("model has no weights to train")]
    EmptyModel,

    #[error("no data")]
    EmptyData,

    #[error("invalid finite-difference step {0}")]
    InvalidStep(f64),

    #[error("cannot scale a series whose minimum equals its maximum ({0})")]
    DegenerateRange(f64),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{path}: line {line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl SfnError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        SfnError::Io {
            path: path.into(),
            source,
        }
    }
}
