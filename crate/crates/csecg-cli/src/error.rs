use std::fmt;

/// CLI failure carrying its process exit code: 2 for configuration
/// problems, 3 for unreadable or malformed data, 4 for corrupted streams.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Data(String),
    Io {
        context: String,
        source: std::io::Error,
    },
    Core(csecg::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) | CliError::Io { .. } => 3,
            CliError::Core(e) if e.is_stream_corruption() => 4,
            CliError::Core(csecg::Error::Config { .. }) => 2,
            CliError::Core(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "configuration error: {msg}"),
            CliError::Data(msg) => write!(f, "data error: {msg}"),
            CliError::Io { context, source } => write!(f, "{context}: {source}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for CliError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            CliError::Io { source, .. } => Some(source),
            CliError::Core(e) => Some(e),
            _ => None,
        }
    }
}

impl From<csecg::Error> for CliError {
    fn from(e: csecg::Error) -> Self {
        CliError::Core(e)
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

/// Builds an I/O-error wrapper that remembers what was being done.
pub fn io_err(context: impl Into<String>) -> impl FnOnce(std::io::Error) -> CliError {
    let context = context.into();
    move |source| CliError::Io { context, source }
}
