//! Error types shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A structural parameter is invalid (grid sizes, exponents, β sign, …).
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Angular node count must be divisible by the number of components so
    /// that every component rotation is an exact index shift.
    #[error("angular node count {m} is not divisible by component count {ell}")]
    Divisibility { m: usize, ell: usize },

    /// Two fields that must live on the same grid do not.
    #[error("fields live on different grids")]
    GridMismatch,

    /// The Nehari denominator ∫|u₁|^{2p} + β Σ_{j≠1} ∫|u₁|^p|u_j|^p is not
    /// strictly positive, so no scale of the field lies on the manifold.
    #[error("nonpositive Nehari denominator (denominator {denominator:.3e}, self term {self_term:.3e})")]
    NonpositiveDenominator { denominator: f64, self_term: f64 },

    /// An iterative solve ran out of budget.
    #[error("solver did not converge within {iterations} iterations (gradient max norm {grad_max:.3e}, tolerance {tol:.3e})")]
    NoConvergence {
        iterations: usize,
        grad_max: f64,
        tol: f64,
    },

    /// Test-tuple construction detected overlapping supports.
    #[error("test tuple supports overlap: {0}")]
    Overlap(String),

    /// A continuation step failed; the offending coupling value is attached.
    #[error("continuation failed at beta = {beta}: {source}")]
    ContinuationPoint {
        beta: f64,
        #[source]
        source: Box<Error>,
    },

    /// Not enough data points for a requested fit or trend.
    #[error("underdetermined: {0}")]
    Underdetermined(String),

    /// Empty support at the requested threshold.
    #[error("empty support: {0}")]
    EmptySupport(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),

    /// A field dump did not round-trip or has a malformed header.
    #[error("malformed field dump: {0}")]
    Dump(String),
}

pub type Result<T> = std::result::Result<T, Error>;
