use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("pixel index {index} out of bounds for image of {len} pixels")]
    OutOfBounds { index: usize, len: usize },

    #[error("cluster {cluster} has zero total membership weight")]
    EmptyCluster { cluster: usize },

    #[error("cluster {cluster} has zero spread; possibilistic scale is undefined")]
    DegenerateEta { cluster: usize },

    #[error("covariance matrix is singular")]
    SingularCovariance,

    #[error("invalid reference mask: {0}")]
    InvalidReference(String),

    #[error("invalid phantom spec: {0}")]
    InvalidSpec(String),

    #[error("unsupported image format: {0}")]
    UnsupportedFormat(String),

    #[error("malformed header: {0}")]
    MalformedHeader(String),

    #[error("truncated payload: expected {expected} bytes, found {found}")]
    TruncatedPayload { expected: usize, found: usize },

    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Coarse failure classes, used by the CLI and the C ABI to pick exit/status codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Caller supplied bad arguments or inconsistent inputs.
    Usage,
    /// A solver could not proceed (empty cluster, degenerate scale, singular covariance).
    Solver,
    /// Reading or writing a file failed, or its contents were not decodable.
    Io,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidParameters(_)
            | Error::DimensionMismatch { .. }
            | Error::OutOfBounds { .. }
            | Error::InvalidReference(_)
            | Error::InvalidSpec(_) => ErrorKind::Usage,
            Error::EmptyCluster { .. } | Error::DegenerateEta { .. } | Error::SingularCovariance => {
                ErrorKind::Solver
            }
            Error::UnsupportedFormat(_)
            | Error::MalformedHeader(_)
            | Error::TruncatedPayload { .. }
            | Error::Io(_) => ErrorKind::Io,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameters(msg.into())
    }
}
