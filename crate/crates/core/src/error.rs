use thiserror::Error;

use crate::model::Violation;

#[derive(Debug, Error)]
pub enum Error {
    /// The caller broke an operation's precondition.
    #[error("usage error: {0}")]
    Usage(String),

    #[error("invalid game ({} violation(s)): {}", .0.len(), first_violation(.0))]
    Invalid(Vec<Violation>),

    /// An enumeration would exceed the configured budget.
    #[error("enumeration budget exceeded: {what} needs {count} items, budget is {budget}")]
    Budget {
        what: String,
        count: u128,
        budget: u128,
    },
}

fn first_violation(v: &[Violation]) -> String {
    v.first().map(|v| v.to_string()).unwrap_or_default()
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn usage<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Usage(msg.into()))
}
