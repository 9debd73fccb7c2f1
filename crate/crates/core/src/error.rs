use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to read {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("failed to parse {what}")]
    Json {
        what: String,
        #[source]
        source: serde_json::Error,
    },

    /// Structurally valid JSON that violates a documented schema rule.
    #[error("schema violation: {0}")]
    Schema(String),

    #[error("resource underflow: cannot subtract {rhs} from {lhs}")]
    Underflow { lhs: String, rhs: String },

    #[error("resource {resource} used ({used}) on a slot with zero capacity")]
    ZeroCapacity { resource: &'static str, used: u64 },

    #[error("unknown function `{0}`")]
    UnknownFunction(String),

    #[error("function `{function}` does not resolve to a template")]
    UnresolvedFunction { function: String },

    #[error("function `{function}` matches several name rules: {templates:?}")]
    AmbiguousFunction {
        function: String,
        templates: Vec<String>,
    },

    #[error("unknown QoR point `{point}` for template `{template}`")]
    UnknownPoint { template: String, point: String },

    #[error("kernel graph contains a cycle through `{0}`")]
    CyclicKernels(String),

    #[error("configuration has no chosen point for function `{0}`")]
    MissingChoice(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("edge {edge} cannot be routed: {reason}")]
    Unroutable { edge: usize, reason: String },

    #[error("instance exceeds the exact-solver guard: {0}")]
    OverGuard(String),
}

impl Error {
    pub(crate) fn schema(msg: impl Into<String>) -> Self {
        Error::Schema(msg.into())
    }
}
