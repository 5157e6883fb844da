use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid class profile: {0}")]
    InvalidProfile(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("index out of range: {0}")]
    OutOfRange(String),

    #[error("allocation failed: {0}")]
    AllocationFailed(String),

    #[error("allocation infeasible: {0}")]
    Infeasible(String),

    #[error("incompatible strategy: {0}")]
    Incompatible(String),

    #[error("invalid scenario config: {0}")]
    Config(String),

    #[error("malformed results file: {0}")]
    Results(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
