use thiserror::Error;

use vortexcorr::Error as CoreError;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_WRONG_TOOL: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("{0}")]
    Core(#[from] CoreError),

    #[error("cannot write {path}: {source}")]
    Output { path: String, source: std::io::Error },

    #[error("verification failed: {0}")]
    Verification(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Output { .. } => EXIT_CONFIG,
            CliError::Verification(_) => EXIT_VERIFY,
            CliError::Core(e) => match e {
                CoreError::AnisotropicState { .. } | CoreError::Unsupported(_) => EXIT_WRONG_TOOL,
                e if e.is_numerical() => EXIT_NUMERIC,
                _ => EXIT_CONFIG,
            },
        }
    }

    pub fn hint(&self) -> Option<&'static str> {
        match self {
            CliError::Core(CoreError::AnisotropicState { .. }) => {
                Some("hint: the relative angle does not capture this state; rerun `pairdist --two-angle`")
            }
            CliError::Core(CoreError::NoPairs(_)) => Some("hint: the state never holds two particles at once"),
            _ => None,
        }
    }
}
