//! Experiment harness around `gapcast-core`: config parsing, seeded signal
//! and noise generation, parameter sweeps, and CSV/JSON report emission.
//!
//! The binary (`gapcast`) is a thin dispatcher over this library so that
//! integration tests can drive the same code paths in-process.

pub mod config;
pub mod gen;
pub mod sweep;

use gapcast_core::Error as CoreError;

/// Harness-level error with a process exit class attached.
#[derive(Debug, thiserror::Error)]
pub enum AppError {
    /// Bad configuration or arguments; exit code 2.
    #[error("{0}")]
    Config(String),
    /// Propagated computation error; exit code per [`exit_code_for`].
    #[error(transparent)]
    Core(#[from] CoreError),
    /// Filesystem trouble outside the core; exit code 1.
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl AppError {
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Config(_) => 2,
            AppError::Core(e) => exit_code_for(e),
            AppError::Io(_) => 1,
        }
    }
}

/// Exit class for a core error: 1 for IO, 3 for numerical failures where the
/// configuration was legitimate but the computation gave up, 2 for anything
/// the user could have caught in the config.
pub fn exit_code_for(e: &CoreError) -> i32 {
    match e {
        CoreError::Io(_) | CoreError::Json(_) => 1,
        CoreError::GridCapExceeded { .. }
        | CoreError::PoleAtZ { .. }
        | CoreError::NonFiniteTaps { .. }
        | CoreError::NoFeasibleDelta => 3,
        _ => 2,
    }
}

pub type AppResult<T> = std::result::Result<T, AppError>;
