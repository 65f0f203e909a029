//! CLI error wrapper mapping failures onto exit codes:
//! 1 usage/config, 2 data, 3 numeric.

use fairsense_core::Error as CoreError;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(CoreError),
}

pub type CliResult<T> = Result<T, CliError>;

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        CliError::Core(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "{msg}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Core(e) => match e {
                CoreError::NonFiniteLoss { .. } => 3,
                CoreError::Contract(_) => 1,
                _ => 2,
            },
        }
    }
}
