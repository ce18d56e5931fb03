use alloc::string::String;

/// Errors raised by the numerical routines.
///
/// Every variant names the offending parameter so callers can surface it
/// without extra bookkeeping.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("{name} = {value} is outside the domain: {reason}")]
    Domain {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("columns are linearly dependent (column {column})")]
    RankDeficient { column: usize },
    #[error("contract violated: {0}")]
    Contract(String),
    #[error("unsupported: {0}")]
    Unsupported(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(name: &'static str, value: f64, reason: &'static str) -> Self {
        Error::Domain {
            name,
            value,
            reason,
        }
    }
}
