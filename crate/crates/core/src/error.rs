use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid operator: {0}")]
    InvalidOperator(String),

    #[error("invalid projector: {0}")]
    InvalidProjector(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("index {index} out of range (limit {limit})")]
    IndexOutOfRange { index: usize, limit: usize },

    #[error("unsupported classical dimension {0}")]
    UnsupportedDimension(usize),

    #[error("coupling operators violate the CP structural conditions: {0}")]
    CpViolation(String),

    #[error("trace drift {drift:.3e} at t = {t} exceeds tolerance; reduce the step")]
    TraceDrift { t: f64, drift: f64 },

    #[error("block eigenvalue {min_eigenvalue:.3e} at t = {t} below tolerance; reduce the step")]
    PositivityLoss { t: f64, min_eigenvalue: f64 },

    #[error("no admissible shape: {0}")]
    NoTopology(String),
}

impl Error {
    /// True for failures raised by the integrator's numerical guards.
    pub fn is_numerical_guard(&self) -> bool {
        matches!(self, Error::TraceDrift { .. } | Error::PositivityLoss { .. })
    }
}
