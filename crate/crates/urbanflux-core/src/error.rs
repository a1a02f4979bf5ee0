use alloc::string::String;

/// Errors produced by the engine.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("index {index} out of range (len {len})")]
    OutOfRange { index: usize, len: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid scene: {0}")]
    InvalidScene(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("weather gap: {0}")]
    WeatherGap(String),
    #[error("configuration mismatch: {0}")]
    ConfigMismatch(String),
}

pub type Result<T> = core::result::Result<T, ModelError>;

impl ModelError {
    pub fn invalid_argument(msg: impl Into<String>) -> Self {
        ModelError::InvalidArgument(msg.into())
    }

    pub fn invalid_scene(msg: impl Into<String>) -> Self {
        ModelError::InvalidScene(msg.into())
    }
}
