use bubbletower_core::Error;

/// Input errors exit with status 2; analysis errors are reported and exit 1.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Analysis(String),
}

impl CliError {
    pub fn input(msg: impl Into<String>) -> Self {
        CliError::Input(msg.into())
    }

    pub fn analysis(msg: impl Into<String>) -> Self {
        CliError::Analysis(msg.into())
    }

    /// Classifies a kernel error raised while reading `source`.
    pub fn from_core(source: &str, e: Error) -> Self {
        if is_input(&e) {
            CliError::Input(format!("{source}: {e}"))
        } else {
            CliError::Analysis(format!("{source}: {e}"))
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Analysis(_) => 1,
        }
    }
}

fn is_input(e: &Error) -> bool {
    match e {
        Error::Syntax { .. }
        | Error::CoordinateOutOfRange { .. }
        | Error::UnsupportedDimension { .. }
        | Error::Invalid(_)
        | Error::Complex(_)
        | Error::Io { .. } => true,
        Error::AtLine { source, .. } => is_input(source),
        _ => false,
    }
}
