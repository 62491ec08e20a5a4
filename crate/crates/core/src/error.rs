//! Crate-wide error type.

/// Errors produced by model construction, fitting, integration, and estimation.
#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// Linear relative risk evaluated where 1 + beta'x <= 0.
    #[error("non-positive relative risk: 1 + beta'x = {value}")]
    NonPositiveRisk { value: f64 },

    /// A clamped counterfactual was differentiated at a clamped point.
    #[error("counterfactual is not differentiable at the requested point (clamp active)")]
    NonDifferentiableAtPoint,

    #[error("invalid parameters: {0}")]
    InvalidParameters(String),

    /// No parameter vector of the requested family matches the given moments.
    #[error("infeasible moments for {family}: {reason}")]
    InfeasibleMoments { family: &'static str, reason: String },

    #[error("{family} fitting requires strictly positive data")]
    NonPositiveData { family: &'static str },

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("optimizer diverged: {0}")]
    OptimizerDiverged(String),

    /// Adaptive quadrature exhausted its subdivision budget. Carries the best
    /// value and error estimate reached.
    #[error("quadrature did not converge: value {value}, error estimate {error_estimate}")]
    QuadratureFailure { value: f64, error_estimate: f64 },

    #[error("invalid probability mass function: {0}")]
    InvalidPmf(String),

    /// Fewer than two observations.
    #[error("degenerate sample: at least two observations are required")]
    DegenerateSample,

    /// Mean observed relative risk came out non-positive (possible with the
    /// linear form and extreme coefficients).
    #[error("mean observed relative risk is non-positive: {0}")]
    NonPositiveMeanRisk(f64),

    #[error("unsupported mode: {0}")]
    UnsupportedMode(String),

    #[error("domain error: {0}")]
    DomainError(String),
}

pub type Result<T> = std::result::Result<T, Error>;
