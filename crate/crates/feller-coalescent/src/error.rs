//! Error types shared across the crate.

/// Crate-wide error type.
///
/// `Domain` marks inputs outside an operation's stated domain (e.g. `t <= 0`
/// where a positive time is required).  `Numeric` marks a numerical routine
/// that ran out of budget (series cap, subdivision cap) and carries the best
/// estimate obtained together with an error bound for it.
#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("numeric error: {message} (best estimate {estimate:e}, error bound {bound:e})")]
    Numeric {
        message: String,
        estimate: f64,
        bound: f64,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
