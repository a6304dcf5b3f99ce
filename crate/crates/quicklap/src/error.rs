use std::path::PathBuf;

use thiserror::Error;

use crate::language::LanguageError;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("control sequence must be non-empty")]
    EmptyControls,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("vector must be non-zero to normalize")]
    ZeroVector,

    #[error("unknown scenario id `{0}` (expected C, CP, CPC3 or CPC4, or a scenario file path)")]
    UnknownScenario(String),

    #[error("invalid scenario definition: {0}")]
    InvalidScenario(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("language backend: {0}")]
    Language(#[from] LanguageError),

    #[error("failed to read {path}: {source}")]
    ReadFile {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("failed to write {path}: {source}")]
    WriteFile {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
