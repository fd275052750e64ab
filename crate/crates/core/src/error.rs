//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Input outside the mathematical domain of an operation
    /// (c out of range, nonpositive right-hand side, point off the sector, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// Request reaches outside the stored grid or field extent.
    #[error("extent error: {0}")]
    Extent(String),

    /// Grid construction or grid compatibility failure.
    #[error("grid error: {0}")]
    Grid(String),

    /// Root bracketing failed: the map has the same sign at both endpoints.
    #[error("bracket error: f({lo}) = {flo:e} and f({hi}) = {fhi:e} do not bracket the target")]
    Bracket { lo: f64, hi: f64, flo: f64, fhi: f64 },

    /// Too few samples to fit or decide.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// Structurally or numerically singular linear system.
    #[error("singular system: {0}")]
    Singular(String),

    /// Iterative solver failed to reach its tolerance.
    #[error("solver failure: {msg} (residual {residual:e})")]
    Solver { msg: String, residual: f64 },

    /// A stencil direction needs a node the grid does not provide.
    #[error("stencil support error: {0}")]
    StencilSupport(String),

    /// Internally contradictory results (non-monotone shooting map,
    /// classification evidence at odds with the effective constant, ...).
    #[error("consistency error: {0}")]
    Consistency(String),

    /// Candidate subsolution is not convex where it must be.
    #[error("convexity error: {0}")]
    Convexity(String),

    /// A constructive search (profile bending, amplitude selection) ran out
    /// of its iteration budget.
    #[error("construction error: {0}")]
    Construction(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub fn solver(msg: impl Into<String>, residual: f64) -> Self {
        Error::Solver { msg: msg.into(), residual }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
