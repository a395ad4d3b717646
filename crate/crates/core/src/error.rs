use thiserror::Error;

/// Errors raised by model construction, spectral analysis and dynamics.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid model spec: {0}")]
    InvalidSpec(String),

    #[error("model is not mirror symmetric: {0}")]
    Symmetry(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("eigensolver failed: {reason} (worst residual {worst_residual:.3e})")]
    Solver { reason: String, worst_residual: f64 },

    #[error("no PT gauge exists for this vector (defect {defect:.3e})")]
    Gauge { defect: f64 },

    #[error("degenerate gauge: {0}")]
    DegenerateGauge(String),

    #[error("correspondence violated at energy {energy}: residual {residual:.3e}")]
    CorrespondenceViolation { energy: f64, residual: f64 },

    #[error("superposition vanishes (norm {norm:.3e})")]
    NullSuperposition { norm: f64 },

    #[error("state vanishes after symmetrization")]
    NullState,

    #[error("state leaks out of the common subspace: truncation residual {residual:.3e} > {threshold:.3e}")]
    SubspaceLeak { residual: f64, threshold: f64 },

    #[error("outside closed-form domain: {0}")]
    Domain(String),

    #[error("parameter constraint violated: {0}")]
    Constraint(String),

    #[error("matrix exponential out of range: {0}")]
    Range(String),

    #[error("closed form `{formula}` fails its certificate: residual {residual:.3e}")]
    Certificate { formula: String, residual: f64 },

    #[error("singular matrix")]
    Singular,
}

pub type Result<T> = std::result::Result<T, Error>;
