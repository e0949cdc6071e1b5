use thiserror::Error;

/// Failure classes of the numerical pipeline.
///
/// `Hypothesis` marks a violated geometric precondition (the input is not
/// covered by the theory), `Solver` a numerical breakdown of an otherwise
/// valid run, and `Input` malformed data or configuration.
#[derive(Debug, Error)]
pub enum KmlError {
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl KmlError {
    pub fn hypothesis(msg: impl Into<String>) -> Self {
        KmlError::Hypothesis(msg.into())
    }

    pub fn solver(msg: impl Into<String>) -> Self {
        KmlError::Solver(msg.into())
    }

    pub fn input(msg: impl Into<String>) -> Self {
        KmlError::Input(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, KmlError>;
