use std::path::PathBuf;

use thiserror::Error;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const VALIDATION: i32 = 2;
    pub const STATISTICAL: i32 = 3;
    pub const USAGE: i32 = 4;
    pub const CONFIG: i32 = 5;
    pub const MISSING_INPUT: i32 = 6;
    pub const IO: i32 = 7;
}

#[derive(Debug, Error)]
pub enum AppError {
    #[error("{0}")]
    Usage(String),
    #[error("malformed config: {0}")]
    Config(String),
    #[error("missing input: {}", .0.display())]
    MissingInput(PathBuf),
    #[error("io error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("bad file {}: {message}", path.display())]
    Format { path: PathBuf, message: String },
    #[error("validation failed: {0}")]
    Validation(#[from] empiproc_core::Error),
    #[error("validation failed: {0}")]
    Check(String),
    #[error("statistical check failed: {0}")]
    Statistical(String),
}

impl AppError {
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Usage(_) => exit::USAGE,
            AppError::Config(_) => exit::CONFIG,
            AppError::MissingInput(_) => exit::MISSING_INPUT,
            AppError::Io { .. } | AppError::Format { .. } => exit::IO,
            AppError::Validation(_) | AppError::Check(_) => exit::VALIDATION,
            AppError::Statistical(_) => exit::STATISTICAL,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            AppError::Usage(_) => "usage",
            AppError::Config(_) => "config",
            AppError::MissingInput(_) => "missing_input",
            AppError::Io { .. } => "io",
            AppError::Format { .. } => "format",
            AppError::Validation(_) | AppError::Check(_) => "validation",
            AppError::Statistical(_) => "statistical",
        }
    }

    /// One-line machine-readable form for the diagnostic stream.
    pub fn diagnostic(&self) -> String {
        serde_json::json!({ "error": self.kind(), "exit": self.exit_code(), "message": self.to_string() }).to_string()
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        AppError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type AppResult<T> = Result<T, AppError>;
