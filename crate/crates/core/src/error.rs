use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("empty graph input")]
    EmptyInput,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error(
        "network is disconnected ({components} components); extract the giant component first"
    )]
    Disconnected { components: usize },

    #[error("node {node} is isolated; pagerank with eta > 0 needs every degree >= 1")]
    IsolatedNode { node: usize },

    #[error("pagerank did not converge in {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("non-finite value in {stage} integration at step {step}")]
    NonFinite { stage: &'static str, step: usize },

    #[error("could not bracket the budget multiplier after {attempts} widening steps")]
    Bracket { attempts: usize },

    #[error("unknown {kind} '{name}' (available: {available})")]
    UnknownName {
        kind: &'static str,
        name: String,
        available: String,
    },

    #[error("{0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
