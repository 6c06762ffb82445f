//! Error type shared by every module in the crate.

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A model or routine parameter lies outside its admissible range.
    #[error("invalid parameter `{name}`: {constraint} (got {value})")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        constraint: &'static str,
    },

    /// Two arrays that must agree in length do not.
    #[error("dimension mismatch: expected length {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    /// A symmetric system stopped being numerically positive definite: either
    /// a Durbin-Levinson innovation variance or a banded Cholesky pivot
    /// dropped to or below the tolerance at the given (0-based) index.
    #[error("matrix not positive definite at index {index} (pivot {pivot:.6e})")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    /// Newton/spectral search for the joint posterior mode gave up.
    #[error(
        "mode search did not converge after {iterations} iterations \
         (gradient norm {grad_norm:.6e})"
    )]
    ModeSearchFailed { iterations: usize, grad_norm: f64 },

    /// The optimizer could not find any parameter point with a finite
    /// objective value.
    #[error("optimization failed: {0}")]
    OptimizationFailed(String),

    /// Too few observations for the requested operation.
    #[error("insufficient data: need at least {needed} observations, got {got}")]
    InsufficientData { needed: usize, got: usize },

    /// Malformed user input (grids, scale lists, series, CSV fields, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Model name not present in the registry.
    #[error("unknown model `{0}` (available: sv, mrw)")]
    UnknownModel(String),
}
