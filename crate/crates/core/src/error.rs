use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("2-centrality violated: entry ({row}, {col}) has variance {found}, expected {expected}")]
    Centrality {
        row: usize,
        col: usize,
        found: f64,
        expected: f64,
    },

    #[error("sampler exhausted after {0} attempts")]
    SamplerExhausted(usize),

    #[error("simplex stalled after {0} pivots")]
    SolverStall(usize),

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    Convergence {
        iterations: usize,
        residual: f64,
        last_iterate: Vec<f64>,
    },

    #[error("problem too large: {0}")]
    TooLarge(String),

    #[error("schema error at `{path}`: {message}")]
    Schema { path: String, message: String },

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Schema {
            path: path.into(),
            message: message.into(),
        }
    }

    /// True for errors caused by a malformed configuration or input file.
    pub fn is_schema(&self) -> bool {
        matches!(self, Error::Schema { .. } | Error::Format(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
