use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("weight {k} out of range for n = {n}")]
    WeightOutOfRange { n: usize, k: usize },
    #[error("{0}")]
    Domain(String),
    #[error("measure file line {line}: {msg}")]
    MeasureFile { line: usize, msg: String },
    #[error("linear program: {0}")]
    Lp(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
