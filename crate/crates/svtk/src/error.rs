use std::path::PathBuf;

use svtk_core::Error as CoreError;

/// Exit statuses of the `svtk` binary.
pub mod exit {
    pub const SUCCESS: u8 = 0;
    pub const USAGE: u8 = 1;
    pub const MODEL: u8 = 2;
    pub const NUMERICAL: u8 = 3;
    pub const TOLERANCE: u8 = 4;
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad flags or arguments, or an environment problem such as an
    /// unwritable output directory.
    #[error("{0}")]
    Usage(String),

    /// The model could not be read or failed validation.
    #[error("{0}")]
    Model(String),

    #[error("{0}")]
    Numerical(String),

    /// A comparison ran but at least one entry exceeded its tolerance.
    #[error("{0}")]
    Tolerance(String),

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Io { .. } => exit::USAGE,
            CliError::Model(_) => exit::MODEL,
            CliError::Numerical(_) => exit::NUMERICAL,
            CliError::Tolerance(_) => exit::TOLERANCE,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        let msg = e.to_string();
        match e {
            CoreError::InvalidModel { .. } | CoreError::Shape(_) => CliError::Model(msg),
            CoreError::Domain(_)
            | CoreError::InvalidParameter(_)
            | CoreError::Config(_)
            | CoreError::Exclusion { .. }
            | CoreError::Probe { .. } => CliError::Usage(msg),
            CoreError::DegenerateSpectrum { .. }
            | CoreError::Quadrature { .. }
            | CoreError::Divergent { .. }
            | CoreError::NearSingular { .. }
            | CoreError::NonFinite { .. }
            | CoreError::Instability { .. }
            | CoreError::DomainCut { .. }
            | CoreError::Sampling { .. } => CliError::Numerical(msg),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
