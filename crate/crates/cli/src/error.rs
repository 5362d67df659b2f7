use thiserror::Error;

/// Errors surfaced by the command line, each mapped to an exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),

    #[error("usage: {0}")]
    Usage(String),

    #[error("numerical: {0}")]
    Numerical(#[from] haffsim_core::Error),

    #[error("io: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Usage(_) | CliError::Io(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }

    /// The message on one line, for machine consumption on stderr.
    pub fn one_line(&self) -> String {
        let kind = match self {
            CliError::Config(_) => "config",
            CliError::Usage(_) => "usage",
            CliError::Numerical(_) => "numerical",
            CliError::Io(_) => "io",
        };
        let msg = match self {
            CliError::Config(m) | CliError::Usage(m) | CliError::Io(m) => m.clone(),
            CliError::Numerical(e) => e.to_string(),
        };
        format!("error[{kind}]: {}", msg.replace('\n', " "))
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
