use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// The caller violated a precondition (bad index, wrong call order,
    /// out-of-range parameter, ...).
    #[error("usage error: {0}")]
    Usage(String),

    #[error("inference error at position {position}: {message}")]
    Inference { position: usize, message: String },

    /// An enumeration or state-space size exceeded its configured cap.
    #[error("{what} needs {needed} states, exceeding the cap of {cap}")]
    CapExceeded {
        what: &'static str,
        needed: u128,
        cap: u128,
    },

    #[error("ingestion error: symbols outside the declared alphabet: {offenders:?}")]
    Ingestion { offenders: Vec<char> },

    #[error("format error: {0}")]
    Format(String),

    #[error("internal engine error: {0}")]
    Engine(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }
}
