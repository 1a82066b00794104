use thiserror::Error;

/// Errors surfaced by model construction, estimation, and quadrature.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("dimension {got} too small: need d >= {need}")]
    DimensionTooSmall { need: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("target weight omega must lie in [0, 1), got {0}")]
    InvalidOmega(f64),

    #[error("estimator requires a scale estimate s2 but none was supplied")]
    MissingScaleEstimate,

    #[error("estimator takes no scale estimate but one was supplied")]
    UnexpectedScaleEstimate,

    #[error("integral diverges: {0}")]
    DivergentIntegral(String),

    #[error("integral did not converge: {0}")]
    NonConvergentIntegral(String),

    #[error("required moment is not finite: {0}")]
    InfiniteMoment(String),

    #[error("kernel has no scale-mixing record; only the moment route is available")]
    NoMixingRecord,

    #[error("tilt weight is unbounded at the origin; rejection sampling unavailable")]
    UnboundedTiltWeight,

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),

    #[error("manifest output: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
