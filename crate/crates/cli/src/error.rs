use std::fmt;
use std::path::PathBuf;

use thiserror::Error;

/// Where in the scenario document a problem was found.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Location {
    pub line: Option<usize>,
    pub field: Option<String>,
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.line, &self.field) {
            (Some(l), Some(k)) => write!(f, "line {l}, field `{k}`"),
            (Some(l), None) => write!(f, "line {l}"),
            (None, Some(k)) => write!(f, "field `{k}`"),
            (None, None) => write!(f, "document"),
        }
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error at {location}: {message}")]
    Config { location: Location, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn config(field: impl Into<Option<String>>, line: Option<usize>, message: impl Into<String>) -> Self {
        CliError::Config {
            location: Location {
                line,
                field: field.into(),
            },
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}
