use std::fmt;

use thiserror::Error;

/// A configuration value rejected by the schema, with its location.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemaError {
    pub line: Option<usize>,
    pub field: String,
    pub message: String,
}

impl fmt::Display for SchemaError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}")?,
            None => f.write_str("config")?,
        }
        if !self.field.is_empty() {
            write!(f, ", field `{}`", self.field)?;
        }
        write!(f, ": {}", self.message)
    }
}

impl std::error::Error for SchemaError {}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("schema error at {0}")]
    Schema(#[from] SchemaError),

    #[error(transparent)]
    Core(#[from] rdlab_core::Error),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed report {path}: {reason}")]
    Report { path: String, reason: String },

    #[error("suite `{0}` has no section in the configuration")]
    MissingSuite(&'static str),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Schema(_) | CliError::MissingSuite(_) => 2,
            CliError::Core(
                rdlab_core::Error::Parameter { .. } | rdlab_core::Error::InvalidScan(_) | rdlab_core::Error::InvalidConstants(_),
            ) => 2,
            CliError::Core(rdlab_core::Error::BlowUp { .. } | rdlab_core::Error::Overflow { .. }) => 3,
            _ => 4,
        }
    }

    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}
