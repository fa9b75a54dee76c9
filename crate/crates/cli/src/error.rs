//! Error-to-exit-code mapping.
//!
//! Exit codes: 0 success, 2 argument/parse/io failure, 3 violated metric or
//! geometry precondition, 4 fit did not converge (best plane still printed).

use symmpoint_core::{FitError, GeometryError, IoError, MetricError};

pub const EXIT_PARSE_IO: i32 = 2;
pub const EXIT_PRECONDITION: i32 = 3;
pub const EXIT_UNCONVERGED: i32 = 4;

#[derive(Debug)]
pub struct CmdError {
    pub code: i32,
    pub message: String,
}

impl CmdError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_PARSE_IO,
            message: message.into(),
        }
    }

    pub fn io(path: &str, err: &std::io::Error) -> Self {
        Self {
            code: EXIT_PARSE_IO,
            message: format!("{path}: {err}"),
        }
    }
}

impl From<IoError> for CmdError {
    fn from(err: IoError) -> Self {
        let code = match err {
            IoError::Io { .. }
            | IoError::Parse { .. }
            | IoError::ParseBinary { .. }
            | IoError::UnsupportedFormat { .. } => EXIT_PARSE_IO,
            IoError::EmptyCloud { .. } | IoError::NoSurface | IoError::DegenerateCloud => {
                EXIT_PRECONDITION
            }
        };
        Self {
            code,
            message: err.to_string(),
        }
    }
}

impl From<MetricError> for CmdError {
    fn from(err: MetricError) -> Self {
        Self {
            code: EXIT_PRECONDITION,
            message: err.to_string(),
        }
    }
}

impl From<GeometryError> for CmdError {
    fn from(err: GeometryError) -> Self {
        Self {
            code: EXIT_PRECONDITION,
            message: err.to_string(),
        }
    }
}

impl From<FitError> for CmdError {
    fn from(err: FitError) -> Self {
        let code = match err {
            FitError::DegenerateCloud => EXIT_PRECONDITION,
            FitError::InvalidConfig(_) => EXIT_PARSE_IO,
        };
        Self {
            code,
            message: err.to_string(),
        }
    }
}
