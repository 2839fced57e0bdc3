use thiserror::Error;

/// Errors shared by every module of the core.
#[derive(Debug, Error)]
pub enum Error {
    /// A box or rectangle reaches outside the field domain.
    #[error("geometry outside the field domain: {0}")]
    OutsideDomain(String),

    /// A box, interval or candidate set is degenerate (zero measure, empty).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// A parameter violates its documented range.
    #[error("invalid parameter {name}: {why}")]
    InvalidParameter { name: &'static str, why: String },

    /// Exact packing search refused: too many candidates.
    #[error("exact packing search refused for {count} candidates (cap {cap}); use greedy mode")]
    TooManyCandidates { count: usize, cap: usize },

    /// Field file I/O or format problems.
    #[error("field format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(name: &'static str, why: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            why: why.into(),
        }
    }
}
