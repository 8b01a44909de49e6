use thiserror::Error;

/// Errors raised by the simulation and analysis layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("grid mismatch between operands")]
    GridMismatch,
    #[error("blow-up detected after t = {last_finite_time}")]
    BlowupDetected { last_finite_time: f64 },
    #[error(
        "truncation guard: {fraction:.3e} of the L1 mass lies in the outer shell at t = {time} \
         (limit {limit:.1e}); enlarge L"
    )]
    TruncationGuard { time: f64, fraction: f64, limit: f64 },
    #[error("fit rejected: {0}")]
    Fit(String),
    #[error("missing observable: {0}")]
    MissingObservable(String),
    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
