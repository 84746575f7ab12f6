use thiserror::Error;

/// Harness-level failures, split by exit code: configuration problems exit
/// with 1, runtime failures with 2.
#[derive(Debug, Error)]
pub enum BenchError {
    #[error("config error: {0}")]
    Config(String),

    #[error("runtime error: {0}")]
    Runtime(String),
}

impl BenchError {
    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::Config(_) => 1,
            BenchError::Runtime(_) => 2,
        }
    }
}

impl From<revamp::RevampError> for BenchError {
    fn from(e: revamp::RevampError) -> Self {
        BenchError::Runtime(e.to_string())
    }
}

impl From<std::io::Error> for BenchError {
    fn from(e: std::io::Error) -> Self {
        BenchError::Runtime(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, BenchError>;
