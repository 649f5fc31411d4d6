use thiserror::Error;

/// Errors raised by the GLDE toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum GldeError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite value: {0}")]
    NonFinite(&'static str),

    #[error("invalid interval [{a}, {b}]")]
    InvalidInterval { a: f64, b: f64 },

    #[error("invalid representation: {0}")]
    InvalidRepresentation(String),

    #[error("condition (H) violated at t = {time}: |det| = {det:.3e}")]
    HViolation { time: f64, det: f64 },

    #[error("step size {0} is too small for the requested span")]
    StepUnderflow(f64),

    #[error("integrator is not of periodic-increment type")]
    NonPeriodic,

    #[error("t = {0} lies outside the domain of a non-periodic integrator")]
    OutsideDomain(f64),

    #[error("forcing term required")]
    MissingForcing,

    #[error("vector is not an eigenvector of the monodromy matrix (residual {0:.3e})")]
    NotEigenvector(f64),

    #[error("resonant system: multiplier(s) within tolerance of 1: {0:?}")]
    Resonant(Vec<(f64, f64)>),

    #[error("no exponential dichotomy: multiplier(s) on or near the unit circle: {0:?}")]
    NoDichotomy(Vec<(f64, f64)>),

    #[error("singular matrix in {0}")]
    Singular(&'static str),

    #[error("{what} = {value:.3e} exceeds tolerance {tol:.1e}")]
    Tolerance { what: &'static str, value: f64, tol: f64 },

    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, GldeError>;
