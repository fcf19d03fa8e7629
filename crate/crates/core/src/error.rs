use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("rotation axis undefined for rotation angle {angle:e} rad")]
    DegenerateRotation { angle: f64 },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChainError {
    #[error("invalid assembly: {0}")]
    InvalidAssembly(String),
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptimizerError {
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("invalid configuration: {0}")]
    Config(String),
}

/// Failure to read or validate one of the input files.
#[derive(Debug, Error)]
pub enum ParseError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Syntax { path: String, message: String },
    #[error("{path}: field `{field}`: {message}")]
    Field {
        path: String,
        field: String,
        message: String,
    },
}

impl ParseError {
    pub(crate) fn field(path: &str, field: impl Into<String>, message: impl Into<String>) -> Self {
        ParseError::Field {
            path: path.to_string(),
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn syntax(path: &str, err: toml::de::Error) -> Self {
        ParseError::Syntax {
            path: path.to_string(),
            message: err.to_string(),
        }
    }
}
