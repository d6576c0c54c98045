//! Crate-wide error type. Numerical kernels, parsers and audits all funnel
//! into this enum so that closures crossing module boundaries (integrands,
//! vector fields) don't need generic error plumbing.

use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    /// Expression text failed to parse. `position` is 1-based (in chars);
    /// end-of-input reports `len + 1`.
    #[error("syntax error at position {position}: {message}")]
    Syntax { position: usize, message: String },

    /// A well-formed expression was evaluated outside its domain
    /// (log of a non-positive value, division by zero, fractional power of
    /// a negative base, ...). Carries the offending subexpression.
    #[error("domain error evaluating `{subexpr}` at x = {x}: {reason}")]
    Domain {
        subexpr: String,
        x: f64,
        reason: String,
    },

    /// Step size collapsed below the representable minimum while integrating
    /// the flow ODE.
    #[error("flow integration stalled near t = {t}, x = {x}: step size underflow")]
    Stiffness { t: f64, x: f64 },

    /// Adaptive quadrature exhausted its subdivision budget.
    #[error("quadrature failed to converge within {max_subdivisions} subdivisions on [{a}, {b}]")]
    MaxSubdivisions { a: f64, b: f64, max_subdivisions: usize },

    /// A problem document or one of its fields violates the schema
    /// or the model invariants.
    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    /// Grid-function table import failed.
    #[error("invalid grid table at line {line}: {message}")]
    GridTable { line: usize, message: String },

    /// I/O or serialization problem while reading/writing documents.
    #[error("{0}")]
    Io(String),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidProblem(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
