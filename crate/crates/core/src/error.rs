use thiserror::Error;

/// Errors raised by the numerical routines and the I/O layer.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eig:e} below -{clip_tol:e})")]
    NotPsd { min_eig: f64, clip_tol: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("coefficient is not a unitary-cocycle generator: {0}")]
    NotUnitaryGenerator(String),

    #[error("invalid flow generator: {0}")]
    InvalidFlow(String),

    #[error("invalid step function: {0}")]
    InvalidStepFunction(String),

    #[error("memory cap exceeded: {required} bytes requested, cap is {cap} bytes")]
    MemoryCap { required: u128, cap: u64 },

    #[error("invalid instance: {0}")]
    Instance(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn dim_err(msg: impl Into<String>) -> Error {
    Error::Dimension(msg.into())
}
