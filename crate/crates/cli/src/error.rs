use isac_core::IsacError;

/// Failure classes, each mapped to a process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("invariant violations:\n  {}", .0.join("\n  "))]
    Invariant(Vec<String>),
    #[error("solver failure: {0}")]
    Solver(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invariant(_) => 1,
            CliError::Config(_) => 2,
            CliError::Solver(_) => 3,
        }
    }
}

impl From<IsacError> for CliError {
    fn from(e: IsacError) -> Self {
        match e {
            IsacError::InvalidParameter { .. }
            | IsacError::DimensionMismatch { .. }
            | IsacError::NotPositiveDefinite { .. }
            | IsacError::Io { .. }
            | IsacError::Parse { .. } => CliError::Config(e.to_string()),
            _ => CliError::Solver(e.to_string()),
        }
    }
}
