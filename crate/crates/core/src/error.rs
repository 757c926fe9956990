use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid MDP: {0}")]
    InvalidMdp(String),

    #[error("label table `{name}` has {actual} entries, expected {expected}")]
    LabelSize {
        name: String,
        expected: usize,
        actual: usize,
    },

    #[error("label entry {index} is not finite")]
    NonFiniteLabel { index: usize },

    #[error("value table has {actual} entries, expected {expected}")]
    ValueSize { expected: usize, actual: usize },

    #[error("discount factor {0} outside [0, 1)")]
    InvalidDiscount(f64),

    #[error("invalid stochastic policy at state {state}: {reason}")]
    InvalidStochasticPolicy { state: usize, reason: String },

    #[error("invalid policy: {0}")]
    InvalidPolicy(String),

    #[error("state {state} out of range (num_states = {num_states})")]
    StateOutOfRange { state: usize, num_states: usize },

    #[error("max_steps must be at least 1")]
    ZeroSteps,

    #[error("trajectory has not cycled, objective value not yet determined")]
    NotCycled,

    #[error("objective mismatch: trajectory tracks {tracked}, requested {requested}")]
    ObjectiveMismatch { tracked: String, requested: String },

    #[error("value table is not a fixed point of the {problem} recursion (residual {residual})")]
    NotFixedPoint { problem: String, residual: f64 },

    #[error("inconsistent input: {0}")]
    Inconsistent(String),

    #[error("enumeration cap exceeded: {needed} > {cap}")]
    CapExceeded { needed: f64, cap: f64 },

    #[error("reduction expects an odd number of arguments, got {0}")]
    EvenArity(usize),

    #[error("trajectory segment too short: need {needed} states, have {actual}")]
    ShortSegment { needed: usize, actual: usize },

    #[error("invalid grid spec: {0}")]
    InvalidGrid(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
