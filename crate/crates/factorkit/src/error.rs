use thiserror::Error;

/// Errors reported by every solver in the crate.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("input error: {0}")]
    Input(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("negative cycle: {0}")]
    NegativeCycle(String),
    #[error("probabilistic failure after {attempts} attempts: {reason}")]
    Probabilistic { attempts: usize, reason: String },
    #[error("unlucky evaluation: {0}")]
    Unlucky(String),
    #[error("inconsistent structure: {0}")]
    Inconsistent(String),
    #[error("oracle budget exceeded: {0}")]
    Budget(String),
}

impl Error {
    pub fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub fn infeasible(msg: impl Into<String>) -> Self {
        Error::Infeasible(msg.into())
    }

    pub fn unlucky(msg: impl Into<String>) -> Self {
        Error::Unlucky(msg.into())
    }

    pub fn inconsistent(msg: impl Into<String>) -> Self {
        Error::Inconsistent(msg.into())
    }

    /// True for failures that a fresh random seed may cure.
    pub fn is_retryable(&self) -> bool {
        matches!(self, Error::Unlucky(_) | Error::Inconsistent(_))
    }

    /// Process exit code used by the command line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Infeasible(_) | Error::NegativeCycle(_) => 1,
            Error::Probabilistic { .. } | Error::Unlucky(_) | Error::Inconsistent(_) => 2,
            Error::Input(_) | Error::Budget(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
