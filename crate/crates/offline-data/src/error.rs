use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] pomdp_core::Error),

    /// The dataset on disk was generated from a different artifact than the
    /// one supplied for pairing.
    #[error("{artifact} hash mismatch: meta records {recorded}, supplied artifact hashes to {supplied}")]
    HashMismatch {
        artifact: &'static str,
        recorded: String,
        supplied: String,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Core(e.into())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Core(e.into())
    }
}
