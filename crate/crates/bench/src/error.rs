use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    /// Bad command line or missing input; exit status 2.
    #[error("usage: {0}")]
    Usage(String),
    /// Config that does not parse or validate; exit status 2.
    #[error("invalid config: {0}")]
    Config(String),
    /// Every replication of some combo failed; exit status 1.
    #[error("run failed: {0}")]
    Run(String),
    /// Verification battery or plot input failure; exit status 1.
    #[error("{0}")]
    Failed(String),
    #[error("i/o: {0}")]
    Io(String),
}

impl BenchError {
    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::Usage(_) | BenchError::Config(_) => 2,
            _ => 1,
        }
    }
}

impl From<std::io::Error> for BenchError {
    fn from(e: std::io::Error) -> Self {
        BenchError::Io(e.to_string())
    }
}

impl From<csv::Error> for BenchError {
    fn from(e: csv::Error) -> Self {
        BenchError::Io(e.to_string())
    }
}
