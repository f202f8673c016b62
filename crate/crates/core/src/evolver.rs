//! Strang-split spectral integrator for the Wigner master equation and its
//! classical Fokker-Planck limit.
//!
//! One step of length `dt` is
//!
//! 1. half kinetic shear `exp(-(dt/2) (p/m) d/dx)`, exact in the x-transform;
//! 2. full momentum step in the p-conjugate variable `lambda`: force, quantum
//!    correction and diffusion, with the drive frozen at the step midpoint;
//! 3. half kinetic shear.
//!
//! Transform convention along p: `F(lambda) = sum_j f(p_j) exp(-i lambda p_j) dp`,
//! so `d/dp` acts as `i lambda`. Along x the same convention holds with `k`.
//! The Nyquist bin of every transform keeps only the even (real) part of its
//! exponent. All zero-frequency multipliers are exactly one, so the discrete
//! mass is conserved to roundoff.

use std::sync::Arc;

use rayon::prelude::*;
use realfft::num_complex::Complex64;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};

use crate::diagnostics::RunDiagnostics;
use crate::dynamics::{DiffusionSpec, SystemParams};
use crate::error::{ConfigError, NumericalError, Result};
use crate::phase_space::{mass, PhaseSpaceGrid, WignerField};

/// Default bound on the mass held in the outermost two-cell frame.
pub const DEFAULT_BOUNDARY_MASS_LIMIT: f64 = 1e-6;

/// Minimum steps per driving period before a warning is emitted.
pub const MIN_STEPS_PER_PERIOD: f64 = 64.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Quantum,
    Classical,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Quantum => "quantum",
            Mode::Classical => "classical",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        match s {
            "quantum" => Ok(Mode::Quantum),
            "classical" => Ok(Mode::Classical),
            other => Err(ConfigError::Parse(format!(
                "mode must be `quantum` or `classical`, got `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolverConfig {
    pub mode: Mode,
    pub params: SystemParams,
    pub diffusion: DiffusionSpec,
    pub dt: f64,
    pub boundary_mass_limit: f64,
}

impl EvolverConfig {
    pub fn new(mode: Mode, params: SystemParams, diffusion: DiffusionSpec, dt: f64) -> Result<Self, ConfigError> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(ConfigError::InvalidValue {
                name: "dt",
                requirement: "positive and finite",
                value: dt,
            });
        }
        let period = params.driving_period();
        if dt > period / MIN_STEPS_PER_PERIOD {
            log::warn!(
                "dt = {dt} resolves the drive with only {:.1} steps per period",
                period / dt
            );
        }
        Ok(EvolverConfig {
            mode,
            params,
            diffusion,
            dt,
            boundary_mass_limit: DEFAULT_BOUNDARY_MASS_LIMIT,
        })
    }

    pub fn with_boundary_mass_limit(mut self, limit: f64) -> Self {
        self.boundary_mass_limit = limit;
        self
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_diffusion(mut self, diffusion: DiffusionSpec) -> Self {
        self.diffusion = diffusion;
        self
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = dt;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    pub time_after: f64,
    pub mass_drift: f64,
    pub boundary_mass: f64,
    pub min_value: f64,
}

/// Exact Moyal generator of the potential terms in the `lambda` representation:
/// `(i/hbar) [V(x + hbar lambda/2, t) - V(x - hbar lambda/2, t)]`.
///
/// For the quartic potential this equals `i lambda V'(x, t) + i hbar^2 B x lambda^3`.
pub fn quantum_kernel(x: f64, lambda: f64, t_mid: f64, params: &SystemParams) -> Complex64 {
    let half_shift = 0.5 * params.hbar * lambda;
    Complex64::new(0.0, params.odd_difference(x, half_shift, t_mid) / params.hbar)
}

/// Liouville (classical) generator `i lambda V'(x, t)`.
pub fn classical_kernel(x: f64, lambda: f64, t_mid: f64, params: &SystemParams) -> Complex64 {
    Complex64::new(0.0, lambda * params.force_gradient(x, t_mid))
}

fn kernel(mode: Mode, x: f64, lambda: f64, t: f64, params: &SystemParams) -> Complex64 {
    match mode {
        Mode::Quantum => quantum_kernel(x, lambda, t, params),
        Mode::Classical => classical_kernel(x, lambda, t, params),
    }
}

/// Angular wavenumbers of the non-negative half spectrum for `n` samples spaced `h`.
fn half_wavenumbers(n: usize, h: f64) -> Vec<f64> {
    let base = 2.0 * std::f64::consts::PI / (n as f64 * h);
    (0..=n / 2).map(|k| base * k as f64).collect()
}

/// Batched real transforms of contiguous rows with per-row spectral multipliers.
struct RowTransform {
    len: usize,
    forward: Arc<dyn RealToComplex<f64>>,
    inverse: Arc<dyn ComplexToReal<f64>>,
}

impl RowTransform {
    fn new(planner: &mut RealFftPlanner<f64>, len: usize) -> Self {
        RowTransform {
            len,
            forward: planner.plan_fft_forward(len),
            inverse: planner.plan_fft_inverse(len),
        }
    }

    fn spectrum_len(&self) -> usize {
        self.len / 2 + 1
    }

    /// Multiplies the spectrum of row `r` by `multipliers[r]` (and, if given, by
    /// the row-independent `common`), then transforms back.
    fn apply(&self, data: &mut [f64], multipliers: &[Complex64], common: Option<&[Complex64]>) {
        let n = self.len;
        let ns = self.spectrum_len();
        let scale = 1.0 / n as f64;
        let forward = &self.forward;
        let inverse = &self.inverse;
        data.par_chunks_mut(n)
            .zip(multipliers.par_chunks(ns))
            .for_each_init(
                || {
                    (
                        forward.make_output_vec(),
                        forward.make_scratch_vec(),
                        inverse.make_scratch_vec(),
                    )
                },
                |(spectrum, fwd_scratch, inv_scratch), (row, mult)| {
                    forward
                        .process_with_scratch(row, spectrum, fwd_scratch)
                        .expect("row length matches plan");
                    for (s, m) in spectrum.iter_mut().zip(mult) {
                        *s *= m;
                    }
                    if let Some(common) = common {
                        for (s, c) in spectrum.iter_mut().zip(common) {
                            *s *= c;
                        }
                    }
                    spectrum[0].im = 0.0;
                    spectrum[ns - 1].im = 0.0;
                    inverse
                        .process_with_scratch(spectrum, row, inv_scratch)
                        .expect("spectrum length matches plan");
                    row.iter_mut().for_each(|v| *v *= scale);
                },
            );
    }
}

fn transpose(src: &[f64], rows: usize, cols: usize, dst: &mut [f64]) {
    const BLOCK: usize = 32;
    for rb in (0..rows).step_by(BLOCK) {
        for cb in (0..cols).step_by(BLOCK) {
            for r in rb..(rb + BLOCK).min(rows) {
                for c in cb..(cb + BLOCK).min(cols) {
                    dst[c * rows + r] = src[r * cols + c];
                }
            }
        }
    }
}

/// Reusable propagator: FFT plans and precomputed multipliers for one grid and config.
pub struct Evolver {
    grid: PhaseSpaceGrid,
    config: EvolverConfig,
    along_x: RowTransform,
    along_p: RowTransform,
    /// `np x (nx/2+1)`: half kinetic shear for each momentum row.
    kinetic: Vec<Complex64>,
    /// Two fused half shears.
    kinetic_full: Vec<Complex64>,
    /// `nx x (np/2+1)`: undriven potential terms plus diffusion over `dt`.
    momentum: Vec<Complex64>,
    lambdas: Vec<f64>,
    drive: Vec<Complex64>,
    transposed: Vec<f64>,
}

impl Evolver {
    pub fn new(grid: PhaseSpaceGrid, config: EvolverConfig) -> Self {
        let mut planner = RealFftPlanner::new();
        let along_x = RowTransform::new(&mut planner, grid.nx());
        let along_p = RowTransform::new(&mut planner, grid.np());
        let lambdas = half_wavenumbers(grid.np(), grid.dp());
        let mut evolver = Evolver {
            grid,
            config,
            along_x,
            along_p,
            kinetic: Vec::new(),
            kinetic_full: Vec::new(),
            momentum: Vec::new(),
            drive: vec![Complex64::new(1.0, 0.0); lambdas.len()],
            lambdas,
            transposed: vec![0.0; grid.len()],
        };
        evolver.rebuild();
        evolver
    }

    pub fn config(&self) -> &EvolverConfig {
        &self.config
    }

    pub fn grid(&self) -> &PhaseSpaceGrid {
        &self.grid
    }

    fn set_dt(&mut self, dt: f64) {
        if dt != self.config.dt {
            self.config.dt = dt;
            self.rebuild();
        }
    }

    fn rebuild(&mut self) {
        let grid = self.grid;
        let cfg = self.config;
        let dt = cfg.dt;
        let m = cfg.params.m;
        let d = cfg.diffusion.coefficient();

        let ks = half_wavenumbers(grid.nx(), grid.dx());
        let shear = |fraction: f64| -> Vec<Complex64> {
            let nyquist_x = ks.len() - 1;
            (0..grid.np())
                .flat_map(|j| {
                    let p = grid.p(j);
                    ks.iter().enumerate().map(move |(q, &k)| {
                        if q == nyquist_x {
                            Complex64::new(1.0, 0.0)
                        } else {
                            Complex64::new(0.0, -k * p * fraction * dt / m).exp()
                        }
                    })
                })
                .collect()
        };
        self.kinetic = shear(0.5);
        self.kinetic_full = shear(1.0);

        let undriven = cfg.params.undriven();
        let nyquist_p = self.lambdas.len() - 1;
        let mut momentum = Vec::with_capacity(grid.nx() * self.lambdas.len());
        for i in 0..grid.nx() {
            let x = grid.x(i);
            for (q, &lambda) in self.lambdas.iter().enumerate() {
                let generator = if q == nyquist_p {
                    Complex64::new(0.0, 0.0)
                } else {
                    kernel(cfg.mode, x, lambda, 0.0, &undriven)
                };
                momentum.push((generator * dt - d * lambda * lambda * dt).exp());
            }
        }
        self.momentum = momentum;
    }

    fn kinetic_half(&mut self, values: &mut [f64]) {
        self.kinetic_shear(values, false);
    }

    fn kinetic_shear(&mut self, values: &mut [f64], full: bool) {
        let (nx, np) = (self.grid.nx(), self.grid.np());
        transpose(values, nx, np, &mut self.transposed);
        let multipliers = if full { &self.kinetic_full } else { &self.kinetic };
        self.along_x.apply(&mut self.transposed, multipliers, None);
        transpose(&self.transposed, np, nx, values);
    }

    fn momentum_full(&mut self, values: &mut [f64], t_mid: f64) {
        let params = &self.config.params;
        let drive = params.lambda * (params.omega * t_mid).cos();
        let nyquist = self.lambdas.len() - 1;
        let dt = self.config.dt;
        for (q, (slot, &lambda)) in self.drive.iter_mut().zip(&self.lambdas).enumerate() {
            *slot = if q == nyquist {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, lambda * drive * dt).exp()
            };
        }
        self.along_p.apply(values, &self.momentum, Some(&self.drive));
    }

    fn check_finite(values: &[f64], substep: &'static str, time: f64) -> Result<(), NumericalError> {
        if values.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(NumericalError::Instability { substep, time })
        }
    }

    /// Mass (in absolute value) held by the outermost two-cell frame of the grid.
    pub fn boundary_mass(field: &WignerField) -> f64 {
        Self::frame_mass(field.grid(), field.values())
    }

    fn frame_mass(grid: &PhaseSpaceGrid, values: &[f64]) -> f64 {
        let (nx, np) = (grid.nx(), grid.np());
        let mut sum = 0.0;
        for i in 0..nx {
            let row = &values[i * np..(i + 1) * np];
            if i < 2 || i >= nx - 2 {
                sum += row.iter().map(|v| v.abs()).sum::<f64>();
            } else {
                sum += row[..2].iter().chain(&row[np - 2..]).map(|v| v.abs()).sum::<f64>();
            }
        }
        sum * grid.dx() * grid.dp()
    }

    /// Advances the field in place by one step of `dt`.
    pub fn step(&mut self, field: &mut WignerField) -> Result<StepReport, NumericalError> {
        if field.grid() != &self.grid {
            return Err(NumericalError::GridMismatch);
        }
        let t0 = field.time;
        let dt = self.config.dt;
        let mass_before = mass(field);

        let values = field.values_mut();
        self.kinetic_half(values);
        Self::check_finite(values, "first kinetic half-step", t0)?;
        self.momentum_full(values, t0 + 0.5 * dt);
        Self::check_finite(values, "momentum", t0)?;
        self.kinetic_half(values);
        Self::check_finite(values, "second kinetic half-step", t0)?;
        field.time = t0 + dt;

        let report = StepReport {
            time_after: field.time,
            mass_drift: mass(field) - mass_before,
            boundary_mass: Self::boundary_mass(field),
            min_value: field.min_value(),
        };
        self.check_boundary(report.boundary_mass, field.time)?;
        Ok(report)
    }

    fn check_boundary(&self, boundary_mass: f64, time: f64) -> Result<(), NumericalError> {
        if boundary_mass > self.config.boundary_mass_limit {
            return Err(NumericalError::DomainOverflow {
                time,
                boundary_mass,
                limit: self.config.boundary_mass_limit,
            });
        }
        Ok(())
    }

    /// Takes steps `k0+1 ..= k1` from `t0` with the kinetic half shears of
    /// neighbouring steps fused into one.
    fn advance_fused(&mut self, field: &mut WignerField, t0: f64, dt: f64, k0: u64, k1: u64) -> Result<()> {
        let grid = *field.grid();
        let values = field.values_mut();
        self.kinetic_half(values);
        for k in k0 + 1..=k1 {
            let t_step = t0 + (k - 1) as f64 * dt;
            self.momentum_full(values, t_step + 0.5 * dt);
            Self::check_finite(values, "momentum", t_step)?;
            if k < k1 {
                self.kinetic_shear(values, true);
                self.check_boundary(Self::frame_mass(&grid, values), t_step + dt)?;
            } else {
                self.kinetic_half(values);
            }
        }
        let time = t0 + k1 as f64 * dt;
        Self::check_finite(field.values(), "kinetic shear", time)?;
        self.check_boundary(Self::boundary_mass(field), time)?;
        Ok(())
    }

    /// Number of steps and the (possibly shortened) step that lands exactly on `t_final`.
    pub fn step_plan(t0: f64, t_final: f64, dt: f64) -> (u64, f64) {
        let span = t_final - t0;
        if span <= 0.0 {
            return (0, dt);
        }
        let n = ((span / dt) - 1e-9).ceil().max(1.0) as u64;
        (n, span / n as f64)
    }

    /// Steps the field to `t_final`, sampling diagnostics every `hooks.sample_every` steps.
    /// Between samples the kinetic half shears of adjacent steps are merged, so
    /// the result can differ from repeated [`Evolver::step`] calls at roundoff level.
    pub fn run(
        &mut self,
        mut field: WignerField,
        t_final: f64,
        hooks: &mut RunHooks<'_>,
    ) -> Result<(WignerField, RunDiagnostics)> {
        let t0 = field.time;
        if t_final < t0 {
            return Err(NumericalError::BackwardsInTime { time: t0, t_final }.into());
        }
        let mut diagnostics = RunDiagnostics::default();
        let (n_steps, dt) = Self::step_plan(t0, t_final, self.config.dt);
        if n_steps == 0 {
            return Ok((field, diagnostics));
        }
        field.require_normalized()?;
        self.set_dt(dt);
        let sample_every = hooks.sample_every.max(1) as u64;
        let observe_every = hooks.observe_every.max(1);
        let observing = hooks.on_step.is_some();
        let next_stop = |k: u64| {
            let next_sample = (k / sample_every + 1) * sample_every;
            let next_observation = if observing {
                (k / observe_every + 1) * observe_every
            } else {
                u64::MAX
            };
            next_sample.min(next_observation).min(n_steps)
        };

        diagnostics.record(&field);
        if let Some(observer) = hooks.on_step.as_mut() {
            observer(0, &field)?;
        }
        let mut k = 0;
        while k < n_steps {
            let stop = next_stop(k);
            self.advance_fused(&mut field, t0, dt, k, stop)?;
            k = stop;
            field.time = if k == n_steps {
                t_final
            } else {
                t0 + k as f64 * dt
            };
            if k % sample_every == 0 || k == n_steps {
                diagnostics.record(&field);
            }
            if k % observe_every == 0 || k == n_steps {
                if let Some(observer) = hooks.on_step.as_mut() {
                    observer(k, &field)?;
                }
            }
        }
        Ok((field, diagnostics))
    }
}

/// Diagnostics cadence and an optional observer, called with the step count
/// at step 0, every `observe_every` steps and at the last step.
pub struct RunHooks<'a> {
    pub sample_every: usize,
    pub observe_every: u64,
    pub on_step: Option<Box<dyn FnMut(u64, &WignerField) -> Result<()> + 'a>>,
}

impl<'a> RunHooks<'a> {
    pub fn every(sample_every: usize) -> Self {
        RunHooks {
            sample_every,
            observe_every: 1,
            on_step: None,
        }
    }

    pub fn with_observer(
        mut self,
        observe_every: u64,
        observer: impl FnMut(u64, &WignerField) -> Result<()> + 'a,
    ) -> Self {
        self.observe_every = observe_every;
        self.on_step = Some(Box::new(observer));
        self
    }
}

/// One step on a fresh propagator. Prefer [`Evolver`] for repeated steps.
pub fn step(field: &WignerField, config: &EvolverConfig) -> Result<(WignerField, StepReport), NumericalError> {
    field.require_normalized()?;
    let mut next = field.clone();
    let report = Evolver::new(*field.grid(), *config).step(&mut next)?;
    Ok((next, report))
}

pub fn run(
    field: WignerField,
    config: &EvolverConfig,
    t_final: f64,
    hooks: &mut RunHooks<'_>,
) -> Result<(WignerField, RunDiagnostics)> {
    Evolver::new(*field.grid(), *config).run(field, t_final, hooks)
}
