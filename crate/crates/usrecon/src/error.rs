//! Error taxonomy and exit-code mapping.
//!
//! The CLI distinguishes only two failure classes: validation problems
//! (bad arguments, malformed files, inconsistent inputs — exit 1) and
//! genuine I/O failures (missing files, permission errors — exit 2).

use std::path::PathBuf;

use thiserror::Error;
use usrecon_core::geometry::GeometryError;
use usrecon_core::mapprep::FilterError;
use usrecon_core::metrics::MetricsError;
use usrecon_core::recon::ReconError;
use usrecon_core::simulate::SimulateError;

pub const EXIT_VALIDATION: u8 = 1;
pub const EXIT_IO: u8 = 2;

/// File-format level failures. Everything except `Io` is a validation
/// problem with the file contents.
#[derive(Debug, Error)]
pub enum FormatError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{path}: payload is {found} bytes, expected {expected}")]
    PayloadSize {
        path: PathBuf,
        expected: usize,
        found: usize,
    },
    #[error("missing frame file {path}")]
    MissingFrame { path: PathBuf },
    #[error("{path}: frame {index} is {found} bytes, expected {expected}")]
    FrameSize {
        path: PathBuf,
        index: usize,
        expected: usize,
        found: usize,
    },
    #[error("frame {index}: invalid pose: {source}")]
    BadPose {
        index: usize,
        source: GeometryError,
    },
}

impl FormatError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        FormatError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        FormatError::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}

/// Top-level CLI failure.
#[derive(Debug, Error)]
pub enum AppError {
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Filter(#[from] FilterError),
    #[error(transparent)]
    Recon(#[from] ReconError),
    #[error(transparent)]
    Simulate(#[from] SimulateError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

impl AppError {
    pub fn invalid(message: impl Into<String>) -> Self {
        AppError::Invalid(message.into())
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            AppError::Format(FormatError::Io { .. }) => EXIT_IO,
            _ => EXIT_VALIDATION,
        }
    }
}
