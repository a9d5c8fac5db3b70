use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// Malformed user input (zero denominator, unparsable rational, empty list).
    #[error("invalid input: {0}")]
    Input(String),

    /// A word that was required to be well-formed is not.
    #[error("word is not well-formed: {0}")]
    WellFormed(String),

    /// Track counts or track indices do not fit the operation.
    #[error("arity error: {0}")]
    Arity(String),

    /// A construction exceeded the active state budget.
    #[error("state budget of {limit} exceeded")]
    StateBudget { limit: usize },

    /// An oracle was asked to handle an instance above its size cap.
    #[error("size cap exceeded: {0}")]
    SizeCap(String),

    /// File or record format problem.
    #[error("format error: {0}")]
    Format(String),

    /// A consistency check inside the pipeline failed. Always a bug.
    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
