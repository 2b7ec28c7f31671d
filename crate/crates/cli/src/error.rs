use lpwan_lifetime::Error as CoreError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error{}: {message}", if path.is_empty() { String::new() } else { format!(" at `{path}`") })]
    Config { path: String, message: String },

    #[error("input data error: {0}")]
    Input(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn config(path: &str, message: impl Into<String>) -> Self {
        CliError::Config {
            path: path.to_string(),
            message: message.into(),
        }
    }

    /// 2 config, 3 input data, 4 numeric or bracket failure; plain I/O is 1.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => 2,
            CliError::Input(_) => 3,
            CliError::Numeric(_) => 4,
            CliError::Io(_) => 1,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Domain(_) | CoreError::InfeasibleCycle(_) => CliError::Config {
                path: String::new(),
                message: e.to_string(),
            },
            CoreError::Numeric(_) | CoreError::Bracket { .. } => CliError::Numeric(e.to_string()),
            CoreError::Parse { .. }
            | CoreError::Sequencing { .. }
            | CoreError::EmptyInput
            | CoreError::TooFewSamples { .. }
            | CoreError::MissingLabel { .. }
            | CoreError::InsufficientTrace { .. } => CliError::Input(e.to_string()),
        }
    }
}
