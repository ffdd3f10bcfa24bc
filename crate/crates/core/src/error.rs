use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter violated its domain or sign constraint.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// Diode exponent argument exceeded the configured cap before `exp` was taken.
    #[error("diode exponent argument {argument:.3} exceeds cap {cap}")]
    Saturation { argument: f64, cap: f64 },

    #[error("solver did not converge after {iterations} iterations; last bracket [{lo}, {hi}]")]
    NonConvergence { iterations: usize, lo: f64, hi: f64 },

    #[error("residual does not change sign on bracket [{lo}, {hi}] (f(lo)={f_lo}, f(hi)={f_hi})")]
    InvalidBracket { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    #[error("at v={voltage} V: {source}")]
    AtVoltage { voltage: f64, source: Box<Error> },

    #[error("sample {index}: {source}")]
    AtSample { index: usize, source: Box<Error> },

    #[error("network has no neurons")]
    EmptyNetwork,

    #[error("{0} network cannot be used as a current source")]
    WrongOutputKind(&'static str),

    #[error("relative MSE undefined: all targets are zero")]
    ZeroTargets,

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("malformed curve: {0}")]
    MalformedCurve(String),

    #[error("curve grids differ: {0}")]
    GridMismatch(String),

    #[error("under-determined fit: {points} points for {parameters} parameters")]
    UnderDetermined { points: usize, parameters: usize },

    #[error("invalid data: {0}")]
    Data(String),

    #[error("line {line}: {message}")]
    Csv { line: u64, message: String },

    #[error("model document: {0}")]
    Document(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn at_voltage(self, voltage: f64) -> Self {
        Error::AtVoltage {
            voltage,
            source: Box::new(self),
        }
    }

    pub(crate) fn at_sample(self, index: usize) -> Self {
        Error::AtSample {
            index,
            source: Box::new(self),
        }
    }

    /// True for failures of a numerical procedure rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::Saturation { .. }
            | Error::NonConvergence { .. }
            | Error::InvalidBracket { .. } => true,
            Error::AtVoltage { source, .. } | Error::AtSample { source, .. } => {
                source.is_numerical()
            }
            _ => false,
        }
    }
}
