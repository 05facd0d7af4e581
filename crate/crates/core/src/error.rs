use thiserror::Error;

/// Errors produced anywhere in the colorblend pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A value lies outside the domain of a color transform.
    #[error("domain error: {0}")]
    Domain(String),

    /// A malformed input row. `line` is 1-based and counts the header.
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    /// A required (background, color, condition) cell is missing.
    #[error("missing cell: {0}")]
    MissingCell(String),

    #[error("configuration error: {0}")]
    Config(String),

    /// The operation has no meaningful answer for the given input
    /// (identical backgrounds, collinear hull points).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("empty input: {0}")]
    Empty(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
