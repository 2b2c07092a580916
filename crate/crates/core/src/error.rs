use thiserror::Error;

/// Errors raised across the estimation and diagnosis pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid dimensions: {0}")]
    Dimension(String),

    #[error("invalid sensor configuration: {0}")]
    Sensor(String),

    #[error("integration diverged at step {step}")]
    IntegrationDiverged { step: usize },

    #[error("state-space pair is not observable (rank {rank} < {states})")]
    NotObservable { rank: usize, states: usize },

    #[error("filter gain has not reached steady state (max change {max_change:e})")]
    NotSteadyState { max_change: f64 },

    #[error("insufficient history: need index {needed}, have {available} samples")]
    InsufficientHistory { needed: usize, available: usize },

    #[error("degenerate statistics: {0}")]
    DegenerateStatistics(String),

    #[error("parameter subset is unidentifiable: {0}")]
    UnidentifiableSubset(String),

    #[error("empty parameter selection")]
    EmptySelection,

    #[error("configuration error at `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_finite(values: &[f64], what: &str) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::Domain(format!("{what}[{i}] is not finite"))),
        None => Ok(()),
    }
}
