use thiserror::Error;

/// Errors raised by parsing, fitting and aggregation.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("duplicate skater name {name:?} (line {line})")]
    DuplicateName { name: String, line: usize },

    #[error("insufficient data: need at least {needed} usable pairs, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("singular design matrix (condition number {condition:.3e}); covariates are collinear")]
    SingularDesign { condition: f64 },

    #[error("all usable skaters started in the same lane on day 1; d is not identifiable")]
    OneLaneGroup,

    #[error("profile likelihood search did not converge: {0}")]
    NonConvergence(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("event labels differ at position {index}: {left:?} vs {right:?}")]
    LabelMismatch {
        index: usize,
        left: String,
        right: String,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
