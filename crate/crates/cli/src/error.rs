use std::fmt;

/// Failure of a command, carrying its process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Invalid or unreadable configuration (exit 2).
    Config(String),
    /// The optimizer missed its tolerance under `--strict` (exit 3).
    NoConvergence(String),
    /// Time integration failed (exit 4).
    Integrator(String),
    /// The generator has an unstable spectrum (exit 5).
    Spectrum(String),
    /// Anything else, including I/O (exit 1).
    Other(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::NoConvergence(_) => 3,
            CliError::Integrator(_) => 4,
            CliError::Spectrum(_) => 5,
            CliError::Other(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::NoConvergence(m) => write!(f, "optimizer did not converge: {m}"),
            CliError::Integrator(m) => write!(f, "integrator failure: {m}"),
            CliError::Spectrum(m) => write!(f, "spectrum failure: {m}"),
            CliError::Other(e) => write!(f, "{e:#}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Other(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Other(e.into())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Other(e.into())
    }
}

/// Library errors keep their category where one exists.
impl From<darkpump::Error> for CliError {
    fn from(e: darkpump::Error) -> Self {
        use darkpump::Error as E;
        match e {
            E::StepSizeUnderflow { .. } | E::PositivityViolation { .. } => {
                CliError::Integrator(e.to_string())
            }
            E::UnstableSpectrum(_) | E::EigenFailure => CliError::Spectrum(e.to_string()),
            E::InvalidDensity(_)
            | E::InvalidField(_)
            | E::InvalidTarget(_)
            | E::InvalidRates(_)
            | E::DegenerateSpan(_) => CliError::Config(e.to_string()),
            other => CliError::Other(other.into()),
        }
    }
}
