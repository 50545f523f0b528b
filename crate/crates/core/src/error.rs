use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("domain error: {0}")]
    Domain(String),

    /// A non-finite quantity appeared while running the learner.
    #[error("numeric failure at slot {slot}: {detail}")]
    Numeric { slot: u64, detail: String },

    /// The problem definition violated one of its contracts (empty menu,
    /// transition row not summing to one, illegal action, ...).
    #[error("model error: {0}")]
    Model(String),

    #[error("instance too large: {policies} deterministic policies exceed the limit of {limit}")]
    InstanceTooLarge { policies: u128, limit: u128 },

    #[error("internal error: {0}")]
    Internal(String),

    #[error("empty run: at least one slot is required")]
    EmptyRun,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
