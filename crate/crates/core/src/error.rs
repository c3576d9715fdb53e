use std::path::PathBuf;

/// Errors raised by the force model, scenario loading and the planner.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid arc segment: {0}")]
    InvalidSegment(String),

    #[error("arc length {s} outside path range [0, {length}]")]
    OutOfRange { s: f64, length: f64 },

    #[error("resolution must be positive and finite, got {0}")]
    InvalidResolution(f64),

    #[error("invalid tissue parameters: {0}")]
    InvalidTissue(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    /// The internal force grew past what double precision can represent.
    #[error("internal force saturated (capstan exponent {exponent:.3} exceeds limit)")]
    Saturation { exponent: f64 },

    #[error("rank-deficient data: {0}")]
    RankDeficient(String),

    #[error("parse error at `{path}`: {message}")]
    Parse { path: String, message: String },

    #[error("invalid `{field}`: {message}")]
    Validation { field: String, message: String },

    #[error("invalid planner configuration: {0}")]
    InvalidConfig(String),

    #[error("voxel grid: {0}")]
    Voxel(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Prefixes the field path of a parse error with `outer`.
    pub(crate) fn within(self, outer: &str) -> Self {
        match self {
            Error::Parse { path, message } => Error::Parse {
                path: if path == "." { outer.to_string() } else { format!("{outer}.{path}") },
                message,
            },
            other => other,
        }
    }

    pub(crate) fn from_json(err: serde_path_to_error::Error<serde_json::Error>) -> Self {
        let path = err.path().to_string();
        let inner = err.into_inner();
        Error::Parse {
            path,
            message: format!("{} (line {}, column {})", inner, inner.line(), inner.column()),
        }
    }
}
