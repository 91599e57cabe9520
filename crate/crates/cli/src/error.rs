use std::path::PathBuf;

use thiserror::Error;
use weaktunnel_core::corpuscle::CorpuscleError;
use weaktunnel_core::pointer::PointerError;
use weaktunnel_core::quantum::QuantumError;
use weaktunnel_core::scatter::ScatterError;
use weaktunnel_core::tdse::TdseError;
use weaktunnel_core::weakval::WeakValueError;

pub const EXIT_INVALID_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL_GUARD: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("numerical guard tripped: {0}")]
    Guard(String),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_INVALID_CONFIG,
            CliError::Guard(_) => EXIT_NUMERICAL_GUARD,
            CliError::Io { .. } => EXIT_IO,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<QuantumError> for CliError {
    fn from(e: QuantumError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<TdseError> for CliError {
    fn from(e: TdseError) -> Self {
        match e {
            TdseError::InvalidConfig(_) => CliError::Config(e.to_string()),
            TdseError::EdgeDensity { .. } | TdseError::Unstable { .. } => CliError::Guard(e.to_string()),
        }
    }
}

impl From<WeakValueError> for CliError {
    fn from(e: WeakValueError) -> Self {
        match e {
            WeakValueError::OverlapBelowFloor { .. } => CliError::Guard(e.to_string()),
            WeakValueError::Quantum(e) => e.into(),
            WeakValueError::Tdse(e) => e.into(),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<ScatterError> for CliError {
    fn from(e: ScatterError) -> Self {
        match e {
            ScatterError::Overflow(_) | ScatterError::DelayNotConverged { .. } => CliError::Guard(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<CorpuscleError> for CliError {
    fn from(e: CorpuscleError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<PointerError> for CliError {
    fn from(e: PointerError) -> Self {
        match e {
            PointerError::QuadratureNotConverged { .. } => CliError::Guard(e.to_string()),
            PointerError::WeakValue(e) => e.into(),
            PointerError::Corpuscle(e) => e.into(),
            _ => CliError::Config(e.to_string()),
        }
    }
}
