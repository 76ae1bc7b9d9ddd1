use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Failure classes shared by every module of the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("optimizer failed to converge: {0}")]
    ConvergenceFailure(String),

    #[error("all {0} candidate thresholds rejected by the goodness-of-fit sequence")]
    AllThresholdsRejected(usize),

    #[error("argument outside the domain: {0}")]
    Domain(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("zero variance in {0}")]
    ZeroVariance(String),

    #[error("value out of range: {0}")]
    OutOfRange(String),

    #[error("non-finite vine density at row {row}")]
    NonFiniteDensity { row: usize },

    #[error("horizon {horizon} exceeds Markov order {order}")]
    HorizonExceedsOrder { horizon: usize, order: usize },

    #[error("empty {side} world (cause threshold {threshold})")]
    EmptyWorld { side: &'static str, threshold: f64 },

    #[error("impact threshold {v} does not exceed the tail anchor {anchor}")]
    AnchorViolation { v: f64, anchor: f64 },

    #[error("insufficient exceedances: {found} found, {required} required")]
    InsufficientExceedances { found: usize, required: usize },

    #[error("all weights are zero")]
    ZeroVector,

    #[error("schema error: {0}")]
    Schema(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Coarse grouping used by front ends to pick exit statuses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Data,
    Numerical,
    Config,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::ConvergenceFailure(_)
            | Error::NonFiniteDensity { .. }
            | Error::AllThresholdsRejected(_) => ErrorKind::Numerical,
            Error::Precondition(_) | Error::HorizonExceedsOrder { .. } | Error::Schema(_) => {
                ErrorKind::Config
            }
            _ => ErrorKind::Data,
        }
    }
}
