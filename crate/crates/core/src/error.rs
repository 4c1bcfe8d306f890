use thiserror::Error;

/// Errors raised by every module of the crate.
///
/// The split between [`Error::Validation`] and the numerical variants is
/// load-bearing: the CLI maps the former to exit code 2 and the rest to 1.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid `{field}`: {reason}")]
    Validation { field: String, reason: String },

    #[error("dense size guard exceeded: {sites} sites requested, guard is {guard}")]
    GuardExceeded { sites: usize, guard: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("LAPACK routine {routine} failed with info = {info}")]
    Lapack { routine: &'static str, info: i32 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// True for errors caused by bad user input rather than by the numerics.
    pub fn is_validation(&self) -> bool {
        matches!(self, Error::Validation { .. } | Error::Json(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
