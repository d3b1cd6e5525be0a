use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid generator: {0}")]
    InvalidGenerator(String),

    #[error("unknown state `{0}`")]
    UnknownState(String),

    #[error("invalid range: {0}")]
    InvalidRange(String),

    #[error("invalid local-time vector: {0}")]
    InvalidLocalTimes(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("capacity exceeded: {what} ({count} > {limit})")]
    Capacity { what: &'static str, count: usize, limit: usize },

    #[error("series did not converge: {0}")]
    NonConvergence(String),

    #[error("optimization failed: {0}")]
    Optimization(String),

    #[error("simulation aborted: {0}")]
    Simulation(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
