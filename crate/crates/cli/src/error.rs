use std::process::ExitCode;

use thiserror::Error;

/// Failure classes, each with its own exit status.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("invariant violation: {0}")]
    Invariant(String),

    #[error("tolerance failure: {0}")]
    Tolerance(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Config(_) => 2,
            CliError::Invariant(_) => 3,
            CliError::Tolerance(_) => 4,
        })
    }
}

impl From<qdot_walk::Error> for CliError {
    fn from(e: qdot_walk::Error) -> Self {
        use qdot_walk::Error as E;
        let msg = e.to_string();
        match e {
            E::InvalidArgument(_)
            | E::EdgeNotFound(..)
            | E::Parse { .. }
            | E::DimensionMismatch { .. }
            | E::PlanTooShort { .. }
            | E::Json(_) => CliError::Config(msg),
            E::NotUnitary { .. }
            | E::NotNormalized { .. }
            | E::ProtocolIncomplete { .. }
            | E::ShiftOutOfRange { .. }
            | E::SpectralBounds(_) => CliError::Invariant(msg),
            E::CalibrationUnreachable { .. } => CliError::Tolerance(msg),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
