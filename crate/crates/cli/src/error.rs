use std::path::PathBuf;

use fracdecay_core::decayfit::DecayFitError;
use fracdecay_core::fracode::FracodeError;
use fracdecay_core::nonlinear::NonlinearError;
use fracdecay_core::specfun::SpecfunError;
use fracdecay_core::spectral::SpectralError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error at '{key}': {message}")]
    Config { key: String, message: String },
    #[error("scientific violation: {0}")]
    Violation(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Config { key: key.into(), message: message.into() }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => 2,
            CliError::Violation(_) => 3,
            CliError::Degenerate(_) => 4,
            CliError::Numeric(_) | CliError::Io { .. } => 5,
        }
    }
}

/// Parameter problems found by the core crate surface as config errors,
/// everything else as numeric failures.
impl From<SpecfunError> for CliError {
    fn from(e: SpecfunError) -> Self {
        match e {
            SpecfunError::InadmissibleParams(m) | SpecfunError::DomainError(m) => CliError::config("specfun", m),
            e => CliError::Numeric(e.to_string()),
        }
    }
}

impl From<FracodeError> for CliError {
    fn from(e: FracodeError) -> Self {
        match e {
            FracodeError::InvalidGrid(m) | FracodeError::InvalidParams(m) => CliError::config("ode", m),
            e => CliError::Numeric(e.to_string()),
        }
    }
}

impl From<SpectralError> for CliError {
    fn from(e: SpectralError) -> Self {
        match e {
            SpectralError::InvalidGeometry(m) | SpectralError::InvalidParams(m) => CliError::config("spectral", m),
            SpectralError::Specfun(e) => e.into(),
            SpectralError::Fracode(e) => e.into(),
            e => CliError::Numeric(e.to_string()),
        }
    }
}

impl From<NonlinearError> for CliError {
    fn from(e: NonlinearError) -> Self {
        match e {
            NonlinearError::InvalidParams(m) | NonlinearError::UnsupportedRegime(m) => CliError::config("nonlinear", m),
            NonlinearError::HypothesisViolated { hypothesis, detail } => {
                CliError::config(format!("hypothesis ({hypothesis})"), detail)
            }
            NonlinearError::Fracode(e) => e.into(),
            NonlinearError::Spectral(e) => e.into(),
            e => CliError::Numeric(e.to_string()),
        }
    }
}

impl From<DecayFitError> for CliError {
    fn from(e: DecayFitError) -> Self {
        match e {
            DecayFitError::DegenerateTrace(m) => CliError::Degenerate(m),
            e => CliError::Violation(e.to_string()),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
