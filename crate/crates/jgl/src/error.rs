use thiserror::Error;

/// Errors shared across the computation pipeline.
///
/// The variants mirror the failure modes of the individual stages; most of
/// them indicate that a quantity left the regime where the underlying
/// formulas are numerically meaningful (vanishing residues, exhausted
/// precision, collapsed integration steps) rather than a programming error.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid precision context: {0}")]
    InvalidContext(String),

    #[error("invalid weight parameters: {0}")]
    InvalidParams(String),

    #[error("finite-difference step {step:e} underflows the cancellation floor 2^-{floor_bits}")]
    StepUnderflow { step: f64, floor_bits: u32 },

    #[error("precision exhausted: {0}")]
    PrecisionExhausted(String),

    #[error("moment matrix not positive definite at row {n} (h_{n} <= 0)")]
    NotPositiveDefinite { n: usize },

    #[error("quadrature did not converge: {0}")]
    QuadratureNotConverged(String),

    #[error("ladder coefficients evaluated at a pole (z = s{index})")]
    PoleHit { index: usize },

    #[error("degenerate residue R_{{n,{index}}} at n = {n}: {reason}")]
    DegenerateResidue {
        n: usize,
        index: usize,
        reason: String,
    },

    #[error("scaling variables out of order: need t1 < t2, got t1 = {t1}, t2 = {t2}")]
    OrderViolation { t1: f64, t2: f64 },

    #[error("observed convergence rate mismatch: {0}")]
    RateMismatch(String),

    #[error("integration step collapsed at xi = {xi}: {reason}")]
    StepCollapse { xi: f64, reason: String },

    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
