use thiserror::Error;

use crate::model::SystemState;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A configuration parameter violates a model invariant.
    #[error("invalid parameter `{param}`: {reason}")]
    InvalidConfig { param: &'static str, reason: String },

    #[error("PU arrival at state {0} is blocked: all bands are held by PUs")]
    PuSaturated(SystemState),

    #[error("transition from {from} targets unenumerated state {to}")]
    UnknownState { from: SystemState, to: SystemState },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("generator is malformed: {0}")]
    MalformedGenerator(String),

    #[error("state {0} has no outgoing transitions")]
    AbsorbingState(usize),

    #[error("no SU is ever admitted (blocking probability is 1)")]
    NoAdmissions,

    #[error("invalid simulation setting: {0}")]
    InvalidSimulation(String),

    #[error("I/O error: {0}")]
    Io(String),

    #[error("scenario line {line}: {message}")]
    ScenarioSyntax { line: usize, message: String },

    #[error("scenario key `{key}`: {message}")]
    ScenarioValue { key: String, message: String },
}
