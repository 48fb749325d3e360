use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] pomdp_core::Error),

    /// A node at the enumeration frontier has no outgoing edges, so the
    /// induced chain would leak probability mass.
    #[error("frontier node {node:?} has no successors and self-loop closure is disabled")]
    DanglingFrontier { node: String },

    #[error("abstraction map does not fit the graph: {0}")]
    MapMismatch(String),

    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
