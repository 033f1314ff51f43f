use thiserror::Error;

use crate::lang::syntax::Span;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum SyntaxError {
    #[error("{span}: unexpected character {ch:?}")]
    UnexpectedChar { span: Span, ch: char },
    #[error("{span}: expected {expected}, found {found}")]
    Expected { span: Span, expected: String, found: String },
    #[error("{span}: unbound variable `{name}`")]
    Unbound { span: Span, name: String },
    #[error("{span}: `{name}` is a reserved intrinsic name")]
    Reserved { span: Span, name: String },
    #[error("{span}: `let rec` must bind a lambda")]
    LetRecNotLambda { span: Span },
    #[error("{span}: {msg}")]
    Other { span: Span, msg: String },
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum RuntimeError {
    #[error("type error: {0}")]
    Type(String),
    #[error("invalid distribution parameter: {0}")]
    InvalidParameter(String),
    #[error("value outside the distribution's domain: {0}")]
    Shape(String),
    #[error("negative weight {0}")]
    NegativeWeight(f64),
    #[error("replay trace exhausted after {0} draws")]
    TraceExhausted(usize),
    #[error("replay trace has {0} unused draws")]
    TraceNotConsumed(usize),
    #[error("checkpoint already terminated")]
    AlreadyTerminated,
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum InferenceError {
    #[error(transparent)]
    Runtime(#[from] RuntimeError),
    #[error("all particles have zero weight at generation {generation}")]
    DegeneratePopulation { generation: usize },
    #[error("alignment invariant violated: {0}")]
    Invariant(String),
    #[error("no random draws to propose from at step {step}")]
    EmptyDatabase { step: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum OracleError {
    #[error(transparent)]
    Runtime(#[from] RuntimeError),
    #[error("cannot enumerate continuous distribution {0}")]
    Continuous(String),
    #[error("an execution needs more than {0} draws")]
    TooLong(usize),
    #[error("posterior has zero mass")]
    ZeroMass,
}

/// Top-level error for loading and running models.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error(transparent)]
    Runtime(#[from] RuntimeError),
    #[error(transparent)]
    Inference(#[from] InferenceError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("unknown model `{0}`")]
    UnknownModel(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}
