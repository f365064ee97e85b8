use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = DdmError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum DdmError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("linear solver did not converge in {iterations} iterations (relative residual {residual:.3e})")]
    SolverFailure { iterations: usize, residual: f64 },

    #[error("numerical breakdown: {0}")]
    Breakdown(String),

    #[error("time step {step}: {source}")]
    Step {
        step: usize,
        #[source]
        source: Box<DdmError>,
    },

    #[error("non-finite integrand value at ({x}, {y})")]
    NonFiniteSample { x: f64, y: f64 },

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl DdmError {
    pub fn config(msg: impl Into<String>) -> Self {
        DdmError::Config(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        DdmError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the command-line driver.
    pub fn exit_code(&self) -> i32 {
        match self {
            DdmError::Config(_) => 1,
            DdmError::SolverFailure { .. }
            | DdmError::Breakdown(_)
            | DdmError::NonFiniteSample { .. } => 2,
            DdmError::Step { source, .. } => source.exit_code(),
            DdmError::Io { .. } => 3,
        }
    }
}
