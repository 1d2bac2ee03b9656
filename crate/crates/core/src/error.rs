use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invariant violation: {0}")]
    InvariantViolation(String),

    #[error("quadrature failed to converge (achieved error {achieved:.3e}, target {target:.3e})")]
    QuadratureFailure { achieved: f64, target: f64 },

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("ODE step failure at t = {t}: {reason}")]
    StepFailure { t: f64, reason: String },

    #[error("solver failure for mode m = {m} in bracket [{lo}, {hi}]: {reason}")]
    SolverFailure {
        m: i64,
        lo: f64,
        hi: f64,
        reason: String,
    },

    #[error("incomplete input: factor complete to {have}, need {need}")]
    IncompleteInput { have: f64, need: f64 },

    #[error("incomplete spectrum: complete to {have}, requested {need}")]
    IncompleteSpectrum { have: f64, need: f64 },

    #[error("smoothing window too small: spectrum must reach {required} (have {have})")]
    WindowTooSmall { required: f64, have: f64 },

    #[error("cover failure: {0}")]
    CoverFailure(String),

    #[error("audit failure: {0}")]
    AuditFailure(String),
}
