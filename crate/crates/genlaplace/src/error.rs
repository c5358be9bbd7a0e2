use std::fmt;
use std::io;

/// Errors produced by the library.
#[derive(Debug)]
pub enum Error {
    /// An argument is outside the mathematical domain of the operation
    /// (non-finite, non-positive where positivity is required, empty sample, ...).
    Domain(String),
    /// A moment-based estimate does not exist for the given inputs: the
    /// moment ratio is at or below the normal-limit boundary of the range
    /// of the shape map.
    Infeasible(String),
    /// The shape inversion could not bracket a root below the search cap;
    /// the target lies too close to the boundary of the invertible range.
    Boundary(String),
    /// Malformed textual input (CSV, config).
    Parse(String),
    /// Underlying I/O failure.
    Io(io::Error),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
            Error::Infeasible(msg) => write!(f, "infeasible: {msg}"),
            Error::Boundary(msg) => write!(f, "boundary: {msg}"),
            Error::Parse(msg) => write!(f, "parse error: {msg}"),
            Error::Io(err) => write!(f, "i/o error: {err}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io(err) => Some(err),
            _ => None,
        }
    }
}

impl From<io::Error> for Error {
    fn from(err: io::Error) -> Self {
        Error::Io(err)
    }
}

pub type Result<T> = std::result::Result<T, Error>;
