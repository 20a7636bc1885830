use thiserror::Error;

/// Errors raised by the laboratory. Every variant carries the name of the
/// module that detected the problem so CLI messages stay attributable.
#[derive(Debug, Error)]
pub enum Error {
    #[error("[{module}] invalid argument: {msg}")]
    InvalidArgument { module: &'static str, msg: String },

    #[error("[{module}] length mismatch: expected {expected}, got {got}")]
    LengthMismatch {
        module: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("[{module}] vectors are defined on different measures")]
    MeasureMismatch { module: &'static str },

    #[error("[{module}] singular evaluation: {msg}")]
    Singular { module: &'static str, msg: String },

    #[error("[{module}] did not converge: {msg}")]
    NonConvergence { module: &'static str, msg: String },

    #[error("[{module}] invariant violated: {msg}")]
    Invariant { module: &'static str, msg: String },

    #[error("[config] {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(module: &'static str, msg: impl Into<String>) -> Error {
    Error::InvalidArgument {
        module,
        msg: msg.into(),
    }
}
