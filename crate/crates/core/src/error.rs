//! Shared error type for the core library.
//!
//! Every fallible routine in this crate returns [`Result`]. Variants are
//! grouped loosely by flavour: parameter/regime validation, iteration
//! failures, and verification failures (a computation finished but the
//! result did not meet a requested tolerance).

use thiserror::Error;

/// Errors produced by map construction, solving, and analysis routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// The map has zero Jacobian determinant and cannot be inverted.
    #[error("map is non-invertible (b = 0)")]
    NonInvertible,

    /// A rotation phase was requested for a linear block whose eigenvalues
    /// are real and distinct in the forbidden arrangement.
    #[error("no rotation phase: mu2 = {mu2:e} >= lambda^2 = {lambda_sq:e} (real-eigenvalue regime)")]
    SaddleRegime { mu2: f64, lambda_sq: f64 },

    /// The linear block is nilpotent-degenerate (`lambda = 0`, `mu2 = 0`);
    /// the normalized entry functions have no finite value there.
    #[error("degenerate linear block (lambda = 0 and mu2 = 0): S_k has no finite value")]
    DegenerateBlock,

    /// An iterate count exceeded the supported cap.
    #[error("iterate count {k} exceeds the supported maximum {max}")]
    IterateCountTooLarge { k: u32, max: u32 },

    /// A scalar parameter failed validation.
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    /// An implicit boundary-value solve (fixed-point iteration) stalled.
    #[error("implicit solve did not converge within {iters} iterations (last residual {residual:e})")]
    ImplicitSolveDiverged { iters: u32, residual: f64 },

    /// An orbit left the validity domain of a chart while composing maps.
    #[error("point left the chart domain in leg `{leg}`: {detail}")]
    DomainEscape { leg: &'static str, detail: String },

    /// A nondegeneracy quantity was too close to zero to continue.
    #[error("nondegeneracy condition `{condition}` violated: |{value:e}| < {tolerance:e}")]
    Degenerate {
        condition: &'static str,
        value: f64,
        tolerance: f64,
    },

    /// The requested construction needs the rotation branch (`mu2 < 0`).
    #[error("operation requires mu2 < 0 (rotation branch); got mu2 = {mu2:e}")]
    RotationBranchRequired { mu2: f64 },

    /// A requested oscillation zero does not exist in the admissible band.
    #[error("zero #{index} not found: only {found} sign changes in the admissible band")]
    ZeroNotFound { index: usize, found: usize },

    /// Contraction/expansion rate invariants must lie on opposite sides of 1.
    #[error("rate invariants do not straddle 1: J1 = {j1:e}, J2 = {j2:e}")]
    RatesDoNotStraddleOne { j1: f64, j2: f64 },

    /// A coefficient that a coordinate change divides by is numerically zero.
    #[error("rescaling coefficient `{name}` underflowed: |{name}| = {value:e}")]
    ScaleUnderflow { name: &'static str, value: f64 },

    /// An orbit left the escape radius while an estimator needed it bounded.
    #[error("orbit diverged at iteration {index}")]
    OrbitDiverged { index: u64 },

    /// A parameter solve failed (no root bracketed, Newton stalled, ...).
    #[error("parameter solve failed: {0}")]
    SolveFailed(String),

    /// A computation finished but missed a requested accuracy target.
    #[error("verification failed: {0}")]
    VerificationFailed(String),

    /// A sweep grid exceeds the supported cell budget.
    #[error("grid has {cells} cells; the supported maximum is {max}")]
    GridTooLarge { cells: u64, max: u64 },

    /// Configuration file syntax or schema problem.
    #[error("config: {0}")]
    Config(String),

    /// I/O failure, flattened to a message so the error stays `Clone`.
    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
