use thiserror::Error;

/// Errors raised by the kernel, the event driver, the engine and the
/// experiment campaigns.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ShlError {
    #[error("point {re} + {im}i lies below the real axis")]
    BelowAxis { re: f64, im: f64 },

    #[error("slit length must be positive, got {0}")]
    NonPositiveLength(f64),

    #[error("evaluation at a slit branch point: |z - (x ± 1)| = {distance:e} < {radius:e}")]
    BranchPoint { distance: f64, radius: f64 },

    #[error("quadrature did not reach error target {target:e} within {panels} panels (estimate {estimate:e})")]
    QuadratureNonConvergence { target: f64, estimate: f64, panels: usize },

    #[error("window {window} is below the validity floor {floor}")]
    WindowTooSmall { window: f64, floor: f64 },

    #[error("expected {expected} events exceeds the capacity budget of {budget}")]
    Capacity { expected: f64, budget: usize },

    #[error("arrival time {0} collides with an existing event")]
    DuplicateTime(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("tracer left the trusted window: |Re| = {re_abs} > {limit} at t = {time}; rerun with window >= {suggested}")]
    WindowExceeded { re_abs: f64, limit: f64, time: f64, suggested: f64 },

    #[error("log has no injected event at t = {t}, x = {x}")]
    MissingInjection { t: f64, x: f64 },

    #[error("no image points land in the height band around {lambda}")]
    GridTooCoarse { lambda: f64 },

    #[error("malformed event log: {0}")]
    Format(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for ShlError {
    fn from(e: std::io::Error) -> Self {
        ShlError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, ShlError>;
