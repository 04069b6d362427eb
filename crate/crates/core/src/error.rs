use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid case: {}", .0.join("; "))]
    Validation(Vec<String>),

    #[error("network is disconnected")]
    Disconnected,

    #[error("dimension mismatch: expected {expected}, got {got} ({what})")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("index {index} out of range (len {len})")]
    Index { index: usize, len: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("branch-and-bound node limit {0} exceeded")]
    NodeLimitExceeded(usize),

    #[error("screening LP infeasible for line {line}")]
    ScreeningInfeasible { line: usize },

    #[error("load does not belong to the screening context: {0}")]
    ContextMismatch(String),

    #[error("load region is empty: {0}")]
    EmptyRegion(String),

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("not enough samples: need {needed}, have {have}")]
    InsufficientData { needed: usize, have: usize },

    #[error("no feasible commitment for sampled load after {attempts} attempts")]
    InfeasibleSample { attempts: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
