use thiserror::Error;

/// Errors produced by graph loading, estimation and evaluation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("graph has no edges")]
    EmptyGraph,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("node {0} has degree 0 and cannot be used as a seed")]
    IsolatedSeed(String),

    #[error("unknown node id `{0}`")]
    UnknownNode(String),

    #[error("estimate has empty support; nothing to sweep")]
    EmptySupport,

    #[error("invalid node set: {0}")]
    InvalidNodeSet(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    /// True for errors caused by the data (files, ids) rather than by how the
    /// program was invoked.
    pub fn is_data_error(&self) -> bool {
        !matches!(self, Error::InvalidParameter(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
