use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("parse error at line {line}, column {column}{}: {message}", field_suffix(.field))]
    Parse {
        line: usize,
        column: usize,
        field: Option<String>,
        message: String,
    },
    #[error("invalid configuration{}: {message}", field_suffix(.field))]
    Validation {
        field: Option<String>,
        message: String,
    },
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Engine(#[from] qbtransfer::Error),
    #[error("nothing to export: {0}")]
    Empty(String),
    #[error("every point failed; see the manifest for details")]
    TotalFailure,
    #[error("worker pool: {0}")]
    Pool(String),
}

fn field_suffix(field: &Option<String>) -> String {
    match field {
        Some(f) => format!(" (field `{f}`)"),
        None => String::new(),
    }
}

impl CliError {
    pub fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Validation {
            field: Some(field.into()),
            message: message.into(),
        }
    }

    /// Process exit status for this error.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Parse { .. } | CliError::Validation { .. } | CliError::Read { .. } => 2,
            _ => 1,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
