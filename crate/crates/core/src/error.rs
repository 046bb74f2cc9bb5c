use thiserror::Error;

pub type Result<T> = std::result::Result<T, ZoqError>;

#[derive(Debug, Clone, Error)]
pub enum ZoqError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A function query returned NaN or infinity.
    #[error("non-finite objective value {value} at point {point:?}")]
    Evaluation { value: f64, point: Vec<f64> },

    #[error("direction block is numerically rank deficient (condition estimate {condition:.3e})")]
    DegenerateBlock { condition: f64 },

    #[error("configuration error: {0}")]
    Configuration(String),

    /// The iterate left the finite range or blew past the divergence guard.
    #[error("divergence at iteration {iteration}: {reason}")]
    Divergence {
        iteration: usize,
        reason: String,
        last_finite: Vec<f64>,
    },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("rate fit failed: {0}")]
    Fit(String),

    #[error("objective does not provide {0}")]
    Unsupported(&'static str),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for ZoqError {
    fn from(e: std::io::Error) -> Self {
        ZoqError::Io(e.to_string())
    }
}

impl From<csv::Error> for ZoqError {
    fn from(e: csv::Error) -> Self {
        ZoqError::Io(e.to_string())
    }
}
