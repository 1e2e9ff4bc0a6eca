use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by problem validation, policies and the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    /// A declared bound is malformed or the environment's support violates it.
    #[error("bound violation on `{0}`")]
    BoundViolation(String),

    /// `N ∩ [L]` is empty for an arm count `L` the environment can produce.
    #[error("no admissible selection count for a decision set of {0} arms")]
    EmptyActionSpace(usize),

    /// The regret grid extends past the horizon of at least one trace.
    #[error("grid point {point} lies beyond the trace horizon {horizon}")]
    GridBeyondHorizon { point: f64, horizon: f64 },

    /// A dataset row does not follow the expected schema.
    #[error("schema error in {path} at line {line}: {message}")]
    SchemaError { path: PathBuf, line: u64, message: String },

    /// A feature catalog without any arms.
    #[error("catalog {0} contains no arms")]
    EmptyCatalog(PathBuf),

    /// The brute-force eluder search was asked for more than it can enumerate.
    #[error(
        "eluder brute force limited to {max_contexts} contexts and {max_members} members, got {contexts} and {members}"
    )]
    EnvelopeExceeded {
        contexts: usize,
        members: usize,
        max_contexts: usize,
        max_members: usize,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    TomlDe(#[from] toml::de::Error),

    #[error(transparent)]
    TomlSer(#[from] toml::ser::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn bound(field: impl Into<String>) -> Error {
    Error::BoundViolation(field.into())
}
