use thiserror::Error;

/// Errors raised by graph construction, geometric operations and I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown vertex {vertex} in space `{space}`")]
    UnknownVertex { space: String, vertex: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("member `{0}` induces a disconnected subgraph; its intrinsic metric is undefined")]
    DisconnectedMember(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("invalid tree of spaces:\n  {}", .0.join("\n  "))]
    InvalidTree(Vec<String>),

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn invariant(msg: impl Into<String>) -> Self {
        Error::Invariant(msg.into())
    }
}
