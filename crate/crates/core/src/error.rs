use thiserror::Error;

/// Errors produced by the numerical core.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("non-finite input: {0}")]
    NonFinite(&'static str),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("degenerate domain: lo = {lo}, hi = {hi}")]
    DegenerateDomain { lo: f64, hi: f64 },
    #[error("unsupported activation kind for this operation: {0}")]
    UnsupportedKind(String),
    #[error("quadrature did not converge: best estimate {best}, error estimate {est}")]
    QuadratureNoConvergence { best: f64, est: f64 },
    #[error("dataset is in the wrong case for this construction: expected {expected}, got {got}")]
    WrongDataCase { expected: &'static str, got: String },
    #[error("singular constraint: {0}")]
    SingularConstraint(String),
    #[error("solver failed: {0}")]
    SolverFailure(String),
    #[error("gradient evaluation failed: {0}")]
    GradientFailure(String),
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;
