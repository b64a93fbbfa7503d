use thiserror::Error;

/// Errors produced by the toolkit.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// An activity specification failed validation.
    #[error("invalid activity spec: {0}")]
    InvalidSpec(String),

    /// A series was detected (or declared) to diverge.
    #[error("divergent series: {0}")]
    Divergence(String),

    /// A requested truncation window cannot certify the requested tail mass.
    #[error("truncation {given} too small for the requested tolerance; minimal sufficient truncation is {required}")]
    TruncationTooSmall { given: u64, required: u64 },

    /// The fixed-point scan did not locate the number of roots guaranteed by
    /// the regime classification.
    #[error("fixed-point scan failed: expected {expected} roots, found {found} (k={k}, lambda={lambda}); \
             sign-change intervals: {intervals:?}")]
    ScanFailed {
        expected: usize,
        found: usize,
        k: u32,
        lambda: f64,
        intervals: Vec<(f64, f64)>,
    },

    /// Statistics were requested over samples drawn from different measures.
    #[error("samples carry mixed measure tags: {0}")]
    MixedSamples(String),
}

impl Error {
    fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::domain(msg)
}

pub type Result<T> = std::result::Result<T, Error>;
