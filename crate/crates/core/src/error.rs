use thiserror::Error;

/// Errors raised by the core library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("size limit exceeded: {what} needs {requested} but the cap is {cap}")]
    SizeLimit {
        what: String,
        requested: f64,
        cap: f64,
    },

    #[error("evaluation error: {0}")]
    Evaluation(String),

    #[error("distribution `{0}` has no enumerable support or closed-form risk")]
    NotEnumerable(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
