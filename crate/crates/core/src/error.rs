use std::fmt;

/// Line/column position in a source text, both 1-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct SourceSpan {
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    #[error("{span}: {message}")]
    Syntax { span: SourceSpan, message: String },

    #[error("arity mismatch for {relation}: expected {expected}, found {found}")]
    Arity {
        relation: String,
        expected: usize,
        found: usize,
    },

    #[error("{0}")]
    Invalid(String),

    #[error("{stage}: {quantity} = {measured} exceeds limit {limit}")]
    Limit {
        stage: String,
        quantity: String,
        measured: u64,
        limit: u64,
    },
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub fn limit(stage: &str, quantity: &str, measured: u64, limit: u64) -> Self {
        Error::Limit {
            stage: stage.to_string(),
            quantity: quantity.to_string(),
            measured,
            limit,
        }
    }

    /// Prefixes the stage of a resource-limit error; other errors pass through.
    pub fn in_stage(self, stage: &str) -> Self {
        match self {
            Error::Limit {
                stage: inner,
                quantity,
                measured,
                limit,
            } => Error::Limit {
                stage: format!("{stage}/{inner}"),
                quantity,
                measured,
                limit,
            },
            other => other,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
