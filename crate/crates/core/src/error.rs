use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// The (d, q) pair does not give an integrable density.
    #[error("non-normalizable q-Gaussian (d = {d}, q = {q}): requires {bound}")]
    NonNormalizable { d: usize, q: f64, bound: String },

    #[error("unsupported: {0}")]
    Unsupported(String),

    /// Every objective evaluation was non-finite. Carries the per-generation best values.
    #[error("optimization failed: {reason}")]
    OptimizationFailed { reason: String, trace: Vec<f64> },

    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    #[error("degenerate data: ticker {ticker} is constant")]
    DegenerateData { ticker: String },

    #[error("data error: {0}")]
    Data(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Data(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Data(e.to_string())
    }
}
