use thiserror::Error;

/// Errors raised by the numerical routines in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error in {op}: {detail}")]
    Domain { op: &'static str, detail: String },

    /// A truncated series did not reach its tolerance within the term cap.
    #[error("{op} did not converge after {terms} terms")]
    Convergence { op: &'static str, terms: usize },

    /// A recurrence produced a (numerically) vanishing squared norm.
    #[error("degenerate squared norm at basis index {index} (value {value:e})")]
    Degenerate { index: usize, value: f64 },

    /// Fewer distinct data points than unknowns.
    #[error("rank deficient: {points} points for {unknowns} unknowns")]
    RankDeficient { points: usize, unknowns: usize },

    /// A linear system could not be solved stably.
    #[error("ill-conditioned or singular system (condition estimate {cond:e})")]
    Conditioning { cond: f64 },

    /// Inputs that must agree structurally do not.
    #[error("invariant violation: {0}")]
    Invariant(String),

    /// Operation invoked with an inconsistent configuration.
    #[error("usage error: {0}")]
    Usage(String),

    /// A function supplied by the caller returned a non-finite value.
    #[error("non-finite value {value} at x = {x}")]
    Evaluation { x: f64, value: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(op: &'static str, detail: impl Into<String>) -> Error {
    Error::Domain {
        op,
        detail: detail.into(),
    }
}
