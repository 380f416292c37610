//! Shared error type for the whole crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: {detail}")]
    Dimension { op: &'static str, detail: String },

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("graph too small: {0}")]
    TooSmall(String),

    #[error("empty token stream after tokenization")]
    EmptyText,

    #[error("missing data: {0}")]
    MissingData(String),

    #[error("query budget exhausted after {spent} queries")]
    BudgetExhausted { spent: u64 },

    #[error("rate limit exceeded: {spent} queries in current session (limit {limit})")]
    Throttled { spent: u64, limit: u64 },

    #[error("optimizer error: non-finite gradient for parameter '{0}'")]
    Optimizer(String),

    #[error("metric undefined on an empty set")]
    UndefinedMetric,

    #[error("no visible neighbor within 2 hops of node {0}")]
    Unsynthesizable(usize),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
