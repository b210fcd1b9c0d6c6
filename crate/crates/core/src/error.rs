use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid algebra: {0}")]
    InvalidAlgebra(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("operator belongs to a different algebra")]
    AlgebraMismatch,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("operator is not self-adjoint (residual {residual:.3e})")]
    NotSelfAdjoint { residual: f64 },
    #[error("operator is not positive (min eigenvalue {min_eigenvalue:.3e})")]
    NotPositive { min_eigenvalue: f64 },
    #[error(
        "not a projection (idempotency {idempotency:.3e}, self-adjointness {adjointness:.3e})"
    )]
    NotAProjection { idempotency: f64, adjointness: f64 },
    #[error("invalid semigroup: {0}")]
    InvalidSemigroup(String),
    #[error(
        "quadrature did not converge on [{a}, {b}] after {refinements} refinements \
         (achieved error {achieved:.3e}, target {target:.3e})"
    )]
    QuadratureNonConvergence {
        a: f64,
        b: f64,
        refinements: usize,
        achieved: f64,
        target: f64,
    },
    #[error(
        "schedule exhausted: smallest achieved value {smallest:.3e} against target {target:.3e}"
    )]
    ScheduleExhausted { smallest: f64, target: f64 },
    #[error("premise violated at T = {t}: gap {gap:.3e} not below {epsilon:.3e}")]
    PremiseViolated { t: f64, gap: f64, epsilon: f64 },
    #[error("step {step} failed at index {index}: {detail}")]
    StepFailed {
        step: &'static str,
        index: usize,
        detail: String,
    },
    #[error("json: {0}")]
    Json(String),
}

pub type Result<T> = std::result::Result<T, Error>;
