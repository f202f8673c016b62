//! Phase-space simulation of a driven anharmonic oscillator under the Wigner
//! master equation (with momentum diffusion) and its classical Fokker-Planck
//! limit, plus diagnostics for how decoherence screens off the quantum term.

pub mod cli_io;
pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod evolver;
pub mod oracle;
pub mod phase_space;

pub use diagnostics::{
    break_time, field_distance, negativity_volume, screening_report, Metric, RunDiagnostics, ScreeningVerdict,
};
pub use dynamics::{DiffusionSpec, SystemParams};
pub use error::{ConfigError, Error, NumericalError, Result};
pub use evolver::{classical_kernel, quantum_kernel, Evolver, EvolverConfig, Mode, RunHooks, StepReport};
pub use phase_space::{init_gaussian, marginal, mass, moment, Axis, GaussianSpec, Moments, PhaseSpaceGrid, WignerField};
