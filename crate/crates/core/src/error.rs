use std::fmt;

/// A point in the plane where a field expression was evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct At(pub f64, pub f64);

impl fmt::Display for At {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.0, self.1)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("mesh error: {0}")]
    Mesh(String),

    #[error("syntax error at column {column}: {message}")]
    Syntax { column: usize, message: String },

    #[error("unknown identifier `{0}`")]
    UnknownIdentifier(String),

    #[error("domain error at {at}: {message}")]
    Domain { at: At, message: String },

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("mesh resolution too coarse: {0}")]
    Resolution(String),

    #[error("geometry failure: {0}")]
    Geometry(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
