use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] qrdx_core::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed input file.
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("configuration error: {0}")]
    Config(String),

    /// A pipeline stage failed; wraps the underlying error.
    #[error("{stage} stage failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

/// Process exit codes of the command-line tool.
pub mod exit {
    pub const OK: i32 = 0;
    pub const CONFIG: i32 = 2;
    pub const DATA: i32 = 3;
    pub const STAGE: i32 = 4;
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Format { path: path.into(), message: message.into() }
    }

    pub fn exit_code(&self) -> i32 {
        use qrdx_core::Error as C;
        match self {
            Error::Config(_) | Error::Core(C::InvalidConfig(_)) => exit::CONFIG,
            Error::Io { .. } | Error::Format { .. } => exit::DATA,
            Error::Core(C::Shape { .. } | C::Range { .. } | C::DegenerateLabels | C::InsufficientData(_) | C::Format(_)) => {
                exit::DATA
            }
            Error::Core(_) => exit::STAGE,
            Error::Stage { source, .. } => source.exit_code(),
        }
    }
}

/// Attaches a stage name to errors from one pipeline step.
pub trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T, E: Into<Error>> StageExt<T> for std::result::Result<T, E> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| Error::Stage { stage, source: Box::new(e.into()) })
    }
}
