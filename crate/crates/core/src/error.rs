use thiserror::Error;

use crate::partition::Query;

/// Errors produced by the clustering engine and its supporting math.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("item count must be positive")]
    EmptyGround,

    #[error("item {item} out of range for {n} items")]
    ItemOutOfRange { item: usize, n: usize },

    #[error("query compares item {0} with itself")]
    SelfQuery(usize),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("redundant query {0}: relation already known")]
    RedundantQuery(Query),

    #[error("answer to {query} contradicts the current knowledge state")]
    Contradiction { query: Query },

    #[error("{what} exceeds the exhaustive limit ({value} > {limit})")]
    LimitExceeded {
        what: &'static str,
        value: usize,
        limit: usize,
    },

    #[error("step budget of {0} queries exhausted")]
    BudgetExhausted(usize),

    #[error("series diverges: {0}")]
    Divergence(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("unknown strategy `{0}`")]
    UnknownStrategy(String),

    #[error("no chordality-preserving query exists on an unresolved graph")]
    NoChordalCandidate,

    #[error("repair escalated: {0}")]
    Escalated(String),

    #[error("malformed log line {line}: {message}")]
    MalformedLog { line: usize, message: String },

    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
