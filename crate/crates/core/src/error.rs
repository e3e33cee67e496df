use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("index {index} out of range for {what} of size {size}")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        size: usize,
    },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("{0} must contain at least one element")]
    Empty(&'static str),

    #[error("sample carries no truth information (f*, xi) but the operation requires it")]
    MissingTruth,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("empirical norm bound violated: member {index} has norm {norm}, limit {limit}")]
    NormBoundViolated { index: usize, norm: f64, limit: f64 },

    #[error("bracket [{lo}, {hi}] does not contain a probability crossing at level {level}")]
    BracketNoCrossing { lo: f64, hi: f64, level: f64 },

    #[error("instance too large: {0}")]
    InstanceTooLarge(String),

    #[error(
        "rate fit rejected: r^2 = {r2:.4} below the required {required:.2} for slope assertions"
    )]
    RateFitPoor { r2: f64, required: f64 },

    #[error("unknown scenario: {0}")]
    UnknownScenario(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
