use std::fmt;

use padkit::PadError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad flags, request fields or input files.
    Validation,
    /// The numerical backend failed on valid input.
    Numerical,
    NotFound,
    /// Failure writing outputs or the data directory.
    Io,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AppError {
    pub kind: ErrorKind,
    /// Flag or JSON field the error is about, when there is one.
    pub field: Option<String>,
    pub message: String,
}

impl AppError {
    pub fn validation(field: &str, message: impl Into<String>) -> Self {
        Self { kind: ErrorKind::Validation, field: Some(field.to_string()), message: message.into() }
    }

    pub fn not_found(field: &str, message: impl Into<String>) -> Self {
        Self { kind: ErrorKind::NotFound, field: Some(field.to_string()), message: message.into() }
    }

    pub fn io(message: impl Into<String>) -> Self {
        Self { kind: ErrorKind::Io, field: None, message: message.into() }
    }

    /// Exit status for the command line: 2 for bad input, 3 for numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self.kind {
            ErrorKind::Validation | ErrorKind::NotFound => 2,
            ErrorKind::Numerical => 3,
            ErrorKind::Io => 1,
        }
    }

    /// Wraps a core error that came from reading the input named `field`.
    pub fn input(field: &str, err: PadError) -> Self {
        let mut e = AppError::from(err);
        if e.kind == ErrorKind::Io {
            e.kind = ErrorKind::Validation;
        }
        e.field.get_or_insert_with(|| field.to_string());
        e
    }
}

impl fmt::Display for AppError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for AppError {}

impl From<PadError> for AppError {
    fn from(err: PadError) -> Self {
        let message = err.to_string();
        let (kind, field) = match &err {
            e if e.is_numerical() => (ErrorKind::Numerical, None),
            PadError::InvalidParameter { name, .. } => (ErrorKind::Validation, Some(name.to_string())),
            PadError::Io(_) => (ErrorKind::Io, None),
            _ => (ErrorKind::Validation, None),
        };
        Self { kind, field, message }
    }
}

pub type AppResult<T> = std::result::Result<T, AppError>;
