use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter {name}: {reason}")]
    InvalidParam { name: &'static str, reason: String },
    #[error("split {0} outside (0,1)")]
    InvalidSplit(f64),
    #[error("kernel mismatch: {0}")]
    KernelMismatch(String),
    #[error("unstable grid: dt={dt} exceeds dx^2/2={limit}")]
    UnstableGrid { dt: f64, limit: f64 },
    #[error("internal: {0}")]
    Internal(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParam { name, reason: reason.into() }
}
