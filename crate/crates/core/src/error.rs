use thiserror::Error;

/// Errors raised by the state-engineering library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid density operator: {0}")]
    InvalidDensity(String),

    #[error("invalid field parameters: {0}")]
    InvalidField(String),

    #[error("invalid target state: {0}")]
    InvalidTarget(String),

    #[error("invalid rates: {0}")]
    InvalidRates(String),

    #[error("spanning vectors are linearly dependent (smallest singular value {0:e})")]
    DegenerateSpan(f64),

    #[error("input trace {0} differs from 1")]
    TraceMismatch(f64),

    #[error("Tr(rho_bar rho_f) = {0} exceeds 1")]
    NegativeRadicand(f64),

    #[error("numerical null space has dimension {found}, expected {expected}")]
    UnexpectedDimension { expected: usize, found: usize },

    #[error("affine steady state does not match the dark-state solution (mismatch {0:e})")]
    SingularSystem(f64),

    #[error("generator has an eigenvalue with positive real part {0:e}")]
    UnstableSpectrum(f64),

    #[error("eigensolver failed to converge")]
    EigenFailure,

    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepSizeUnderflow { t: f64, h: f64 },

    #[error("density operator lost positivity at t = {t} (min eigenvalue {min_eig:e})")]
    PositivityViolation { t: f64, min_eig: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
