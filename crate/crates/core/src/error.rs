use crate::logic::ParseError;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("language error: {0}")]
    Language(String),

    #[error("grounding error: {0}")]
    Grounding(String),

    #[error("ground atom table would hold {size} atoms, above the cap of {cap}")]
    TableTooLarge { size: usize, cap: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid valuation: {0}")]
    Valuation(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("environment error: {0}")]
    Env(String),

    #[error("training error: {0}")]
    Training(String),

    #[error("invalid argument: {0}")]
    Invalid(String),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
