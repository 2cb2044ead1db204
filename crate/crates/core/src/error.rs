//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Two operands live on different numbers of sites.
    #[error("dimension mismatch: {left} vs {right} sites")]
    SizeMismatch { left: u32, right: u32 },

    /// Text input does not match the Pauli-string grammar.
    #[error("parse error: {0}")]
    Parse(String),

    /// Site index outside 1..=num_sites.
    #[error("site {site} out of range for {num_sites} sites")]
    SiteOutOfRange { site: usize, num_sites: u32 },

    /// The same site appears twice in one string literal.
    #[error("duplicate site index {0}")]
    DuplicateSite(usize),

    /// Invalid model parameters (coupling array lengths, bond counts, ...).
    #[error("model error: {0}")]
    Model(String),

    /// Two same-colored edges meet at a vertex.
    #[error("improper coloring at vertex {vertex}")]
    ImproperColoring { vertex: usize },

    /// A vertex has more than three incident edges.
    #[error("degree exceeds 3 at vertex {vertex}")]
    DegreeExceeded { vertex: usize },

    /// Request exceeds a configured size cap (partition L, oracle L, ...).
    #[error("size {requested} exceeds cap {cap}")]
    CapExceeded { requested: usize, cap: usize },

    /// Operation requires a complete class but the closure hit its budget.
    #[error("operation unsupported on an incomplete class (budget exhausted at {found} members)")]
    IncompleteClass { found: usize },

    /// Internal invariant violated; indicates a bug, not bad input.
    #[error("consistency failure: {0}")]
    Consistency(String),

    /// Numerical quality gate failed (tolerance, non-finite values).
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Malformed configuration input.
    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn size_mismatch(left: u32, right: u32) -> Self {
        Error::SizeMismatch { left, right }
    }
}
