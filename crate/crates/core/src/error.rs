use thiserror::Error;

/// Problem in a model document, located by 1-based line number.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

impl ParseError {
    pub fn new(line: usize, message: impl Into<String>) -> Self {
        Self {
            line,
            message: message.into(),
        }
    }
}

/// The parsed bodies and joints do not form a usable kinematic tree.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("model has no bodies")]
    Empty,
    #[error("joint {joint} closes a kinematic loop between {predecessor} and {successor}")]
    Cycle {
        joint: usize,
        predecessor: String,
        successor: String,
    },
    #[error("body {body} has more than one parent joint")]
    MultipleParents { body: String },
    #[error("base body {body} cannot be the successor of a joint")]
    BaseIsSuccessor { body: String },
    #[error("body {body} is not connected to the base")]
    Disconnected { body: String },
    #[error("unknown body {0}")]
    UnknownBody(String),
    #[error("body {body}: {message}")]
    InvalidBody { body: String, message: String },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error("generalized inertia matrix is not positive definite (pivot {pivot})")]
    NotPositiveDefinite { pivot: usize },
    #[error("expected vectors of length {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IntegrationError {
    #[error("step size must be positive and finite, got {0}")]
    InvalidStep(f64),
    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64 },
    #[error("dynamics failed at t = {t}: {source}")]
    Dynamics {
        t: f64,
        #[source]
        source: DynamicsError,
    },
}

impl IntegrationError {
    pub fn time(&self) -> Option<f64> {
        match self {
            IntegrationError::InvalidStep(_) => None,
            IntegrationError::NonFinite { t } | IntegrationError::Dynamics { t, .. } => Some(*t),
        }
    }
}

/// Top-level error for anything the crate does end to end.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(#[from] ParseError),
    #[error("model error: {0}")]
    Model(#[from] ModelError),
    #[error("dynamics error: {0}")]
    Dynamics(#[from] DynamicsError),
    #[error("integration error: {0}")]
    Integration(#[from] IntegrationError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
