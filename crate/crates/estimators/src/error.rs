use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] pomdp_core::Error),

    #[error(transparent)]
    Abstraction(#[from] abstraction::Error),

    #[error(transparent)]
    Data(#[from] offline_data::Error),

    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
