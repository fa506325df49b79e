//! Crate-wide error type.

use crate::mesh::BoundaryTag;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("mesh error: {0}")]
    Mesh(String),
    #[error("periodic pairing failed: {0}")]
    Pairing(String),
    #[error("boundary tag `{}` is not present in the mesh", .0.name())]
    MissingTag(BoundaryTag),
    #[error("factorization failed: zero pivot at column {index}")]
    Singular { index: usize },
    #[error("solver error: {0}")]
    Solver(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("optimizer failed at iteration {iteration} in stage `{stage}`: {source}")]
    Stage {
        iteration: usize,
        stage: &'static str,
        source: Box<Error>,
    },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }
}
