use thiserror::Error;

use crate::model::{ContainerId, WorkerId};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unknown worker {0}")]
    UnknownWorker(WorkerId),
    #[error("unknown container {0}")]
    UnknownContainer(ContainerId),
    #[error("unknown model profile `{0}`")]
    UnknownProfile(String),
    #[error("iteration {k} outside [0, {total}]")]
    IterationOutOfRange { k: f64, total: u64 },
    #[error("cluster has no workers")]
    NoWorkers,
    #[error("run has unfinished jobs: {0}")]
    Unfinished(usize),
    #[error("invalid config: {0}")]
    Config(String),
    #[error("mismatched scenarios: {0}")]
    Mismatch(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
