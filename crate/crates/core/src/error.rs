use alloc::string::String;
use core::fmt;

/// Errors raised by the numerical core.
///
/// `Usage` covers malformed input and contract violations by the caller;
/// the remaining variants are numerical failures that carry enough context
/// (matrix fingerprint, angle, node) to reproduce them.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Input violates a documented precondition.
    Usage(String),
    /// The eigenvalue iteration did not converge.
    NoConvergence {
        /// FNV-1a fingerprint of the input matrix bits.
        matrix_hash: u64,
        /// Dimension of the matrix.
        dim: usize,
    },
    /// An eigensolve failed while sampling the symbol at `theta`.
    AtAngle {
        theta: f64,
        source: alloc::boxed::Box<Error>,
    },
}

impl Error {
    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub(crate) fn at_angle(self, theta: f64) -> Self {
        Error::AtAngle {
            theta,
            source: alloc::boxed::Box::new(self),
        }
    }

    /// True for caller errors (bad input), false for numerical failures.
    pub fn is_usage(&self) -> bool {
        match self {
            Error::Usage(_) => true,
            Error::NoConvergence { .. } => false,
            Error::AtAngle { source, .. } => source.is_usage(),
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Usage(msg) => write!(f, "usage error: {msg}"),
            Error::NoConvergence { matrix_hash, dim } => write!(
                f,
                "eigenvalue iteration did not converge ({dim}x{dim} matrix, hash {matrix_hash:016x})"
            ),
            Error::AtAngle { theta, source } => write!(f, "at theta = {theta}: {source}"),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
