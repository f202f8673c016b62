//! Run configuration: a sectioned TOML file.
//!
//! ```toml
//! [grid]
//! nx = 256
//! np = 256
//! x_min = -8.0
//! x_max = 8.0
//! p_min = -24.0
//! p_max = 24.0
//!
//! [params]
//! m = 1.0
//! a = 10.0
//! b = 0.5
//! lambda = 10.0
//! omega = 6.07
//! hbar = 0.1
//!
//! [init]
//! x0 = -3.0
//! p0 = 8.0
//! sigma_x = 0.12
//! minimum_uncertainty = true   # sigma_p = hbar / (2 sigma_x)
//!
//! [evolve]
//! mode = "quantum"             # or "classical"
//! steps_per_period = 256       # or: dt = 0.004
//! t_final_periods = 8.0        # or: t_final_abs = 8.28
//! sample_every = 1.0           # snapshot cadence, in driving periods
//! diagnostics_every = 4        # diagnostics cadence, in steps
//! boundary_mass_limit = 1e-6   # optional; fail when the edge frame holds more mass
//! break_eta = 1.0              # optional; divergence level for break times
//!
//! [decoherence]
//! d = 0.025                    # or: gamma, mass_env, kbt
//!
//! [output]
//! dir = "out"
//! formats = ["wigf", "csv", "pgm"]
//! ```
//!
//! Unknown keys anywhere are rejected. `hbar` has no default.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::dynamics::{DiffusionSpec, SystemParams};
use crate::error::ConfigError;
use crate::evolver::{EvolverConfig, Mode, DEFAULT_BOUNDARY_MASS_LIMIT};
use crate::phase_space::{GaussianSpec, PhaseSpaceGrid};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawGrid {
    pub nx: Option<usize>,
    pub np: Option<usize>,
    pub x_min: Option<f64>,
    pub x_max: Option<f64>,
    pub p_min: Option<f64>,
    pub p_max: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawParams {
    pub m: Option<f64>,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub lambda: Option<f64>,
    pub omega: Option<f64>,
    pub hbar: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawInit {
    pub x0: Option<f64>,
    pub p0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_x: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub minimum_uncertainty: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawEvolve {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps_per_period: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_final_periods: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_final_abs: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sample_every: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostics_every: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub boundary_mass_limit: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub break_eta: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawDecoherence {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mass_env: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kbt: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawOutput {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub formats: Option<Vec<String>>,
}

/// The config file as written, before validation. Serializing it yields a
/// canonical config that parses back to the same [`RunConfig`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    #[serde(default)]
    pub grid: RawGrid,
    #[serde(default)]
    pub params: RawParams,
    #[serde(default)]
    pub init: RawInit,
    #[serde(default)]
    pub evolve: RawEvolve,
    #[serde(default)]
    pub decoherence: RawDecoherence,
    #[serde(default)]
    pub output: RawOutput,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeStep {
    Dt(f64),
    PerPeriod(u32),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FinalTime {
    Periods(f64),
    Absolute(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Formats {
    pub wigf: bool,
    pub csv: bool,
    pub pgm: bool,
}

impl Default for Formats {
    fn default() -> Self {
        Formats {
            wigf: true,
            csv: true,
            pgm: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolveSection {
    pub mode: Mode,
    pub step: TimeStep,
    pub t_final: FinalTime,
    pub sample_every: f64,
    pub diagnostics_every: usize,
    pub boundary_mass_limit: f64,
    pub break_eta: f64,
}

/// A validated run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub grid: PhaseSpaceGrid,
    pub params: SystemParams,
    pub init: GaussianSpec,
    pub minimum_uncertainty: bool,
    pub evolve: EvolveSection,
    pub diffusion: DiffusionSpec,
    pub output_dir: Option<PathBuf>,
    pub formats: Formats,
    pub raw: RawConfig,
}

fn required<T: Copy>(value: Option<T>, key: &str) -> Result<T, ConfigError> {
    value.ok_or_else(|| ConfigError::MissingKey(key.to_string()))
}

impl RunConfig {
    pub fn period(&self) -> f64 {
        self.params.driving_period()
    }

    pub fn dt(&self) -> f64 {
        match self.evolve.step {
            TimeStep::Dt(dt) => dt,
            TimeStep::PerPeriod(n) => self.period() / n as f64,
        }
    }

    pub fn t_final(&self) -> f64 {
        match self.evolve.t_final {
            FinalTime::Periods(n) => n * self.period(),
            FinalTime::Absolute(t) => t,
        }
    }

    pub fn evolver_config(&self) -> Result<EvolverConfig, ConfigError> {
        Ok(
            EvolverConfig::new(self.evolve.mode, self.params, self.diffusion, self.dt())?
                .with_boundary_mass_limit(self.evolve.boundary_mass_limit),
        )
    }

    /// Canonical TOML text of this configuration.
    pub fn to_toml(&self) -> String {
        toml::to_string(&self.raw).expect("config is always serializable")
    }

    pub fn from_raw(raw: RawConfig) -> Result<Self, ConfigError> {
        let g = &raw.grid;
        let grid = PhaseSpaceGrid::new(
            required(g.nx, "grid.nx")?,
            required(g.np, "grid.np")?,
            required(g.x_min, "grid.x_min")?,
            required(g.x_max, "grid.x_max")?,
            required(g.p_min, "grid.p_min")?,
            required(g.p_max, "grid.p_max")?,
        )?;

        let p = &raw.params;
        let params = SystemParams::new(
            required(p.m, "params.m")?,
            required(p.a, "params.a")?,
            required(p.b, "params.b")?,
            required(p.lambda, "params.lambda")?,
            required(p.omega, "params.omega")?,
            required(p.hbar, "params.hbar")?,
        )?;

        let i = &raw.init;
        let minimum_uncertainty = i.minimum_uncertainty.unwrap_or(false);
        let x0 = required(i.x0, "init.x0")?;
        let p0 = required(i.p0, "init.p0")?;
        let init = match (minimum_uncertainty, i.sigma_x, i.sigma_p) {
            (true, Some(sx), None) => GaussianSpec::minimum_uncertainty(x0, p0, sx, params.hbar)?,
            (true, None, Some(sp)) => GaussianSpec::new(x0, p0, params.hbar / (2.0 * sp), sp)?,
            (true, None, None) => return Err(ConfigError::MissingKey("init.sigma_x".into())),
            (_, sx, sp) => GaussianSpec::new(
                x0,
                p0,
                required(sx, "init.sigma_x")?,
                required(sp, "init.sigma_p")?,
            )?,
        };
        if minimum_uncertainty {
            init.check_minimum_uncertainty(params.hbar)?;
        }

        let e = &raw.evolve;
        let mode = match &e.mode {
            Some(s) => s.parse()?,
            None => Mode::Quantum,
        };
        let step = match (e.dt, e.steps_per_period) {
            (Some(dt), None) => {
                if !(dt > 0.0 && dt.is_finite()) {
                    return Err(ConfigError::InvalidValue {
                        name: "evolve.dt",
                        requirement: "positive and finite",
                        value: dt,
                    });
                }
                TimeStep::Dt(dt)
            }
            (None, Some(n)) if n > 0 => TimeStep::PerPeriod(n),
            (None, Some(_)) => {
                return Err(ConfigError::InvalidValue {
                    name: "evolve.steps_per_period",
                    requirement: "positive",
                    value: 0.0,
                })
            }
            (None, None) => return Err(ConfigError::MissingKey("evolve.dt".into())),
            (Some(_), Some(_)) => {
                return Err(ConfigError::Conflict(
                    "give exactly one of evolve.dt and evolve.steps_per_period".into(),
                ))
            }
        };
        let t_final = match (e.t_final_periods, e.t_final_abs) {
            (Some(n), None) => FinalTime::Periods(n),
            (None, Some(t)) => FinalTime::Absolute(t),
            _ => {
                return Err(ConfigError::Conflict(
                    "give exactly one of evolve.t_final_periods and evolve.t_final_abs".into(),
                ))
            }
        };
        let t_value = match t_final {
            FinalTime::Periods(v) | FinalTime::Absolute(v) => v,
        };
        if !(t_value >= 0.0 && t_value.is_finite()) {
            return Err(ConfigError::InvalidValue {
                name: "evolve.t_final",
                requirement: "non-negative and finite",
                value: t_value,
            });
        }
        let sample_every = e.sample_every.unwrap_or(1.0);
        if !(sample_every > 0.0 && sample_every.is_finite()) {
            return Err(ConfigError::InvalidValue {
                name: "evolve.sample_every",
                requirement: "positive",
                value: sample_every,
            });
        }
        let diagnostics_every = e.diagnostics_every.unwrap_or(4).max(1);
        let boundary_mass_limit = e.boundary_mass_limit.unwrap_or(DEFAULT_BOUNDARY_MASS_LIMIT);
        if !(boundary_mass_limit > 0.0) {
            return Err(ConfigError::InvalidValue {
                name: "evolve.boundary_mass_limit",
                requirement: "positive",
                value: boundary_mass_limit,
            });
        }
        let break_eta = e.break_eta.unwrap_or(1.0);
        if !(break_eta > 0.0 && break_eta.is_finite()) {
            return Err(ConfigError::InvalidValue {
                name: "evolve.break_eta",
                requirement: "positive",
                value: break_eta,
            });
        }

        let d = &raw.decoherence;
        let diffusion = match (d.d, d.gamma, d.mass_env, d.kbt) {
            (Some(v), None, None, None) => DiffusionSpec::direct(v)?,
            (None, Some(g), Some(m), Some(k)) => DiffusionSpec::derived(g, m, k)?,
            (None, None, None, None) => return Err(ConfigError::MissingKey("decoherence.d".into())),
            (Some(_), ..) => {
                return Err(ConfigError::Conflict(
                    "decoherence.d cannot be combined with gamma/mass_env/kbt".into(),
                ))
            }
            (None, g, m, k) => {
                let missing = [("gamma", g), ("mass_env", m), ("kbt", k)]
                    .into_iter()
                    .find(|(_, v)| v.is_none())
                    .map(|(n, _)| n)
                    .unwrap_or("gamma");
                return Err(ConfigError::MissingKey(format!("decoherence.{missing}")));
            }
        };

        let mut formats = Formats::default();
        if let Some(list) = &raw.output.formats {
            formats = Formats {
                wigf: false,
                csv: false,
                pgm: false,
            };
            for f in list {
                match f.as_str() {
                    "wigf" => formats.wigf = true,
                    "csv" => formats.csv = true,
                    "pgm" => formats.pgm = true,
                    other => return Err(ConfigError::Parse(format!("unknown output format `{other}`"))),
                }
            }
        }

        Ok(RunConfig {
            grid,
            params,
            init,
            minimum_uncertainty,
            evolve: EvolveSection {
                mode,
                step,
                t_final,
                sample_every,
                diagnostics_every,
                boundary_mass_limit,
                break_eta,
            },
            diffusion,
            output_dir: raw.output.dir.clone(),
            formats,
            raw,
        })
    }
}

pub fn parse_table(text: &str) -> Result<toml::Table, ConfigError> {
    text.parse::<toml::Table>().map_err(|e| ConfigError::Parse(e.to_string()))
}

pub fn config_from_table(table: toml::Table) -> Result<RunConfig, ConfigError> {
    let raw: RawConfig = toml::Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
    RunConfig::from_raw(raw)
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    config_from_table(parse_table(text)?)
}

/// Sets `section.name = value` in a parsed table, keeping the value's TOML type
/// (integers stay integers when the literal is integral).
pub fn set_key(table: &mut toml::Table, key: &str, value: &str) -> Result<(), ConfigError> {
    let (section, name) = key
        .split_once('.')
        .ok_or_else(|| ConfigError::Parse(format!("sweep key `{key}` must look like section.name")))?;
    let parsed: toml::Value = format!("v = {value}")
        .parse::<toml::Table>()
        .map_err(|e| ConfigError::Parse(format!("bad sweep value `{value}`: {e}")))?
        .remove("v")
        .expect("key was just written");
    if !matches!(parsed, toml::Value::Integer(_) | toml::Value::Float(_) | toml::Value::Boolean(_)) {
        return Err(ConfigError::Parse(format!("sweep value `{value}` is not a scalar")));
    }
    let entry = table
        .entry(section.to_string())
        .or_insert_with(|| toml::Value::Table(toml::Table::new()));
    let section_table = entry
        .as_table_mut()
        .ok_or_else(|| ConfigError::Parse(format!("`{section}` is not a section")))?;
    section_table.insert(name.to_string(), parsed);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[grid]
nx = 64
np = 64
x_min = -6.0
x_max = 6.0
p_min = -6.0
p_max = 6.0

[params]
m = 1.0
a = 0.0
b = 0.0
lambda = 0.0
omega = 1.0
hbar = 0.1

[init]
x0 = 0.0
p0 = 0.0
sigma_x = 0.5
sigma_p = 0.5

[evolve]
dt = 0.01
t_final_abs = 1.0

[decoherence]
d = 0.0
"#;

    #[test]
    fn minimal_config_parses() {
        let cfg = parse_config(MINIMAL).unwrap();
        assert_eq!(cfg.grid.nx(), 64);
        assert_eq!(cfg.evolve.mode, Mode::Quantum);
        assert_eq!(cfg.dt(), 0.01);
        assert_eq!(cfg.t_final(), 1.0);
        assert_eq!(cfg.diffusion.coefficient(), 0.0);
        assert_eq!(cfg.formats, Formats::default());
    }

    #[test]
    fn missing_hbar_is_named() {
        let text = MINIMAL.replace("hbar = 0.1", "");
        assert_eq!(parse_config(&text), Err(ConfigError::MissingKey("params.hbar".into())));
    }

    #[test]
    fn both_diffusion_forms_conflict() {
        let text = MINIMAL.replace("d = 0.0", "d = 0.1\ngamma = 1.0\nmass_env = 1.0\nkbt = 1.0");
        assert!(matches!(parse_config(&text), Err(ConfigError::Conflict(_))));
        let text = MINIMAL.replace("d = 0.0", "gamma = 1.0\nmass_env = 2.0");
        assert_eq!(parse_config(&text), Err(ConfigError::MissingKey("decoherence.kbt".into())));
        let text = MINIMAL.replace("d = 0.0", "gamma = 0.5\nmass_env = 2.0\nkbt = 0.1");
        assert!((parse_config(&text).unwrap().diffusion.coefficient() - 0.2).abs() < 1e-15);
    }

    #[test]
    fn final_time_forms() {
        let both = MINIMAL.replace("t_final_abs = 1.0", "t_final_abs = 1.0\nt_final_periods = 2.0");
        assert!(matches!(parse_config(&both), Err(ConfigError::Conflict(_))));
        let neither = MINIMAL.replace("t_final_abs = 1.0", "");
        assert!(matches!(parse_config(&neither), Err(ConfigError::Conflict(_))));
        let periods = MINIMAL.replace("t_final_abs = 1.0", "t_final_periods = 2.0");
        let cfg = parse_config(&periods).unwrap();
        assert!((cfg.t_final() - 4.0 * std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn step_forms() {
        let bad = MINIMAL.replace("dt = 0.01", "dt = -0.01");
        assert!(matches!(parse_config(&bad), Err(ConfigError::InvalidValue { .. })));
        let zero = MINIMAL.replace("dt = 0.01", "dt = 0.0");
        assert!(parse_config(&zero).is_err());
        let per = MINIMAL.replace("dt = 0.01", "steps_per_period = 128");
        let cfg = parse_config(&per).unwrap();
        assert_eq!(cfg.dt(), 2.0 * std::f64::consts::PI / 128.0);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = MINIMAL.replace("hbar = 0.1", "hbar = 0.1\nhbarr = 0.2");
        assert!(matches!(parse_config(&text), Err(ConfigError::Parse(_))));
        let text = format!("{MINIMAL}\n[extras]\nfoo = 1\n");
        assert!(matches!(parse_config(&text), Err(ConfigError::Parse(_))));
    }

    #[test]
    fn minimum_uncertainty_fills_sigma_p() {
        let text = MINIMAL.replace("sigma_p = 0.5", "minimum_uncertainty = true");
        let cfg = parse_config(&text).unwrap();
        assert!((cfg.init.sigma_p - 0.1).abs() < 1e-15);
        let inconsistent = MINIMAL.replace("sigma_p = 0.5", "sigma_p = 0.5\nminimum_uncertainty = true");
        assert!(matches!(
            parse_config(&inconsistent),
            Err(ConfigError::NotMinimumUncertainty { .. })
        ));
    }

    #[test]
    fn canonical_text_round_trips() {
        let cfg = parse_config(MINIMAL).unwrap();
        let again = parse_config(&cfg.to_toml()).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn set_key_overrides_scalars() {
        let mut table = parse_table(MINIMAL).unwrap();
        set_key(&mut table, "decoherence.d", "0.05").unwrap();
        set_key(&mut table, "grid.nx", "128").unwrap();
        let cfg = config_from_table(table.clone()).unwrap();
        assert_eq!(cfg.diffusion.coefficient(), 0.05);
        assert_eq!(cfg.grid.nx(), 128);
        assert!(set_key(&mut table, "nodot", "1").is_err());
        assert!(set_key(&mut table, "grid.nx", "[1, 2]").is_err());
    }
}
