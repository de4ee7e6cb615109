use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    /// Bad command-line usage or an unusable configuration.
    #[error("{0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] aixi_core::Error),

    #[error("i/o error on `{path}`: {message}")]
    Io { path: String, message: String },
}

impl HarnessError {
    pub(crate) fn from_config(e: aixi_core::Error) -> Self {
        HarnessError::Config(e.to_string())
    }

    pub(crate) fn io(path: &std::path::Path, e: impl std::fmt::Display) -> Self {
        HarnessError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        }
    }

    /// 2 for usage and configuration problems, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            _ => 1,
        }
    }
}
