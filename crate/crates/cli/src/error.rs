use ghz_distill_core::Error;

pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_NUMERIC: u8 = 3;
/// A `verify` run whose requested conditions do not hold.
pub const EXIT_CONDITIONS_FAILED: u8 = 1;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(Error::ZeroSuccessProbability { .. } | Error::NonPositiveState { .. }) => EXIT_NUMERIC,
            _ => EXIT_CONFIG,
        }
    }
}
