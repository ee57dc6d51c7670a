use thiserror::Error;

pub type Result<T> = std::result::Result<T, PqError>;

#[derive(Debug, Error)]
pub enum PqError {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("shape error: {0}")]
    Shape(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("infeasible split: {0}")]
    InfeasibleSplit(String),

    #[error("no signal with id {0}")]
    MissingId(u64),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: u64, msg: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl PqError {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        PqError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}
