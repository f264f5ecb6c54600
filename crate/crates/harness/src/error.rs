use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{solver} run with seed {seed} failed: {source}")]
    Solver {
        solver: String,
        seed: u64,
        #[source]
        source: projfree_core::Error,
    },
    #[error("guard violation: {0}")]
    Guard(String),
    #[error(transparent)]
    Core(#[from] projfree_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed {what}: {detail}")]
    Format { what: &'static str, detail: String },
}

impl HarnessError {
    /// Process exit code: 2 config/format, 3 solver failure, 4 guard violation.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) | HarnessError::Format { .. } => 2,
            HarnessError::Solver { .. } | HarnessError::Core(_) => 3,
            HarnessError::Guard(_) => 4,
            HarnessError::Io { .. } => 1,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> HarnessError {
        let path = path.into();
        move |source| HarnessError::Io { path, source }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
