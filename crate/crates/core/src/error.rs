use std::path::PathBuf;

use thiserror::Error;

/// Invalid grid, parameter, or run configuration.
#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("grid size {name} = {value} must be a power of two and at least 8")]
    GridSize { name: &'static str, value: usize },
    #[error("degenerate bounds on {axis}: [{min}, {max}]")]
    DegenerateBounds { axis: &'static str, min: f64, max: f64 },
    #[error("{name} must be {requirement}, got {value}")]
    InvalidValue {
        name: &'static str,
        requirement: &'static str,
        value: f64,
    },
    #[error("minimum-uncertainty Gaussian requires sigma_x*sigma_p = hbar/2 = {expected}, got {actual}")]
    NotMinimumUncertainty { expected: f64, actual: f64 },
    #[error("Gaussian leaks mass {leak:e} outside the {axis} axis of the domain")]
    DomainTooSmall { axis: &'static str, leak: f64 },
    #[error("missing required key `{0}`")]
    MissingKey(String),
    #[error("{0}")]
    Conflict(String),
    #[error("config parse error: {0}")]
    Parse(String),
}

/// Failure of a numerical contract during evolution or diagnostics.
#[derive(Debug, Error, PartialEq)]
pub enum NumericalError {
    #[error("state escaped the grid at t = {time}: boundary mass {boundary_mass:e} exceeds limit {limit:e}")]
    DomainOverflow {
        time: f64,
        boundary_mass: f64,
        limit: f64,
    },
    #[error("non-finite values after the {substep} sub-step at t = {time}")]
    Instability { substep: &'static str, time: f64 },
    #[error("field is not normalized: mass = {mass}")]
    Unnormalized { mass: f64 },
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("diagnostic time grids differ")]
    TimeMismatch,
    #[error("final time {t_final} is before the field time {time}")]
    BackwardsInTime { time: f64, t_final: f64 },
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Numerical(#[from] NumericalError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {reason}")]
    Format { path: PathBuf, reason: String },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 1 for configuration problems, 2 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Numerical(_) => 2,
            _ => 1,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
