use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("matrix is not symmetric: {0}")]
    NotSymmetric(String),

    /// Cholesky factorization failed; the matrix is not numerically positive definite.
    #[error("factorization failed: {0}")]
    Factorization(String),

    #[error("precondition violated: {what} (min eigenvalue {min_eigenvalue:e})")]
    Precondition { what: String, min_eigenvalue: f64 },

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("data error{}: {message}", location_suffix(.line, .column))]
    Data {
        message: String,
        line: Option<u64>,
        column: Option<String>,
    },

    #[error("usage: {0}")]
    Usage(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn location_suffix(line: &Option<u64>, column: &Option<String>) -> String {
    match (line, column) {
        (Some(l), Some(c)) => format!(" at line {l}, column '{c}'"),
        (Some(l), None) => format!(" at line {l}"),
        (None, Some(c)) => format!(" in column '{c}'"),
        (None, None) => String::new(),
    }
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn data(msg: impl Into<String>) -> Self {
        Error::Data {
            message: msg.into(),
            line: None,
            column: None,
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) | Error::InvalidParameter(_) | Error::Unsupported(_) => 1,
            Error::Data { .. } | Error::Io(_) | Error::Json(_) | Error::DimensionMismatch { .. } => 2,
            Error::NotSymmetric(_)
            | Error::Factorization(_)
            | Error::Precondition { .. }
            | Error::NonFinite(_) => 3,
        }
    }
}
