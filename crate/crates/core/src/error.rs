//! Error type shared by all solver components.

use thiserror::Error;

/// Errors produced by mesh handling, assembly and the solver drivers.
#[derive(Debug, Error)]
pub enum Error {
    /// A mesh violates a structural invariant (orientation, connectivity,
    /// boundary coverage, ...).
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    /// A mesh or model-definition file could not be parsed.
    /// Carries the offending line number (1-based) and a description.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// I/O failure while reading or writing a file.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// Invalid solver or model configuration.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// A linear solve failed (singular factorization or iteration stall).
    #[error("linear solver failure: {0}")]
    LinearSolve(String),

    /// A nonlinear iteration failed to reach the requested tolerance.
    #[error("nonlinear solver failure: {0}")]
    NonlinearSolve(String),

    /// Inputs are dimensionally inconsistent (wrong vector length, spaces
    /// built on different meshes, ...).
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

/// Convenient result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
