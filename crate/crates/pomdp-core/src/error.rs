use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors shared by the model, filtering, and enumeration layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{kind} row {index} is not a probability distribution (sum {sum:.12}, min entry {min_entry:.3e})")]
    NonStochasticRow {
        kind: &'static str,
        index: usize,
        sum: f64,
        min_entry: f64,
    },

    #[error("reward({state},{action}) = {value} lies outside [0, {rmax}]")]
    RewardOutOfRange {
        state: usize,
        action: usize,
        value: f64,
        rmax: f64,
    },

    #[error("need either gamma in [0,1) or a finite horizon >= 1, got gamma {gamma:?}, horizon {horizon:?}")]
    BadDiscount {
        gamma: Option<f64>,
        horizon: Option<usize>,
    },

    #[error("observation {obs} has zero probability at {context}; history is off-support")]
    UnreachableObservation { obs: usize, context: String },

    #[error("enumeration needs more than the configured cap of {cap} nodes")]
    TreeTooLarge { cap: usize },

    #[error("{what} needs positive probability but found 0 at {context}")]
    SupportViolation { what: &'static str, context: String },

    #[error("{what}: index {index} out of range (size {size})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        size: usize,
    },

    #[error("domain mismatch: {0}")]
    DomainMismatch(String),

    #[error("malformed model or policy document: {0}")]
    SchemaMismatch(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::SchemaMismatch(e.to_string())
    }
}
