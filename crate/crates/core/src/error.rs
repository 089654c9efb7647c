use thiserror::Error;

/// Error type shared by every stage of the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// A scenario definition that cannot be simulated (bad extents, no
    /// target ever inside the field of view, non-positive time step).
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    /// A configuration field failed validation.
    #[error("invalid config `{field}`: {message}")]
    InvalidConfig { field: String, message: String },

    /// An argument outside the documented domain of an operation.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// An operation that is undefined on empty input was given one.
    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    /// Frame sequences that must line up (same count, same indices) do not.
    #[error("frame misalignment: {0}")]
    FrameMisalignment(String),

    /// The scenario produced no reference data at all, so there is nothing
    /// to compare against.
    #[error("scenario not evaluable: {0}")]
    Unevaluable(String),

    /// A file exists but does not parse as the expected format.
    #[error("malformed file {path}: {message}")]
    MalformedFile { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid_config(field: &str, message: impl Into<String>) -> Self {
        Error::InvalidConfig { field: field.to_string(), message: message.into() }
    }
}
