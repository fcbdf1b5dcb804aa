use std::process::ExitCode;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] pap::Error),

    /// A config section or flag the command needs is missing or unusable.
    #[error("{0}")]
    Usage(String),

    #[error("cannot write outputs: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    /// 2 for bad input (including unwritable output locations), 3 when the numerics fail.
    pub fn exit_code(&self) -> ExitCode {
        let code = match self {
            CliError::Core(e) if !e.is_input_error() && !matches!(e, pap::Error::Io(_)) => 3,
            _ => 2,
        };
        ExitCode::from(code)
    }
}

pub type CliResult<T> = Result<T, CliError>;
