use thiserror::Error;

/// Errors produced by the optimization toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied value violated a precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Policy and environment disagree on dimensions.
    #[error("configuration error: {0}")]
    Config(String),

    /// A config file key is unknown or malformed.
    #[error("configuration error: unknown or malformed key `{key}`: {detail}")]
    ConfigKey { key: String, detail: String },

    /// A log-probability gradient was requested for a zero-probability action.
    #[error("singular gradient: action {action} has zero probability in state {state}")]
    SingularGradient { state: String, action: usize },

    /// Exhaustive enumeration would exceed the path budget.
    #[error("resource limit: enumeration would exceed {limit} paths")]
    ResourceLimit { limit: usize },

    /// A (time, state) pair cannot be reached under the current policy.
    #[error("domain error: state {state} is unreachable at time {time}")]
    Unreachable { time: usize, state: usize },

    /// A variational distribution puts mass outside the reference support.
    #[error("divergence error: distribution has mass outside the reference support")]
    Divergence,

    /// The operation needs a deterministic transition rule.
    #[error("invalid input: operation requires deterministic transitions")]
    RequiresDeterministic,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
