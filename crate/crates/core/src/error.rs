use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite sample at index {index}")]
    NonFiniteSample { index: usize },

    #[error("cannot finalize an empty moment summary")]
    EmptySummary,

    #[error("signal has zero mean power (E[X^2] = 0)")]
    ZeroSignalPower,

    #[error("candidate has zero mean power (E[Z^2] = 0)")]
    ZeroCandidatePower,

    #[error("forgetting window degenerated at step {step} (weighted E[Z^2] = 0)")]
    DegenerateWindow { step: usize },

    #[error("invalid spec: {0}")]
    InvalidSpec(String),

    #[error("no closed-form optimum for problem kind `{0}`")]
    NoClosedForm(&'static str),

    #[error("map needs at least one point")]
    EmptyInput,

    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
