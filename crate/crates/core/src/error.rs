use thiserror::Error;

/// Errors raised across the simulation laboratory.
#[derive(Debug, Error)]
pub enum Error {
    /// A distribution parameter is outside its family's domain.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// Unit-mean normalization was requested but cannot be carried out.
    #[error("cannot normalize to unit mean: {0}")]
    Normalization(String),

    /// Simulation or experiment configuration is inconsistent.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Sequences that must share a grid have different shapes.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// A time argument lies outside the simulated grid.
    #[error("out of range: {0}")]
    Range(String),

    /// The CMS time step violates the exact scalar solve condition.
    #[error("step size too large: {0}")]
    StepSize(String),

    /// Birth-death chain has no stationary law.
    #[error("unstable system: {0}")]
    Unstable(String),

    /// An operation was called with arguments it cannot use.
    #[error("usage: {0}")]
    Usage(String),

    /// Text input could not be parsed.
    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
