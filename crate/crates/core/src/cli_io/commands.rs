//! `run`, `compare`, `sweep` and `info`: orchestration and output layout.
//!
//! A run directory holds `manifest.toml` (a config that reproduces the run),
//! `initial.wigf`, `final.wigf`, `diagnostics.csv`, `final.pgm`, and
//! `snapshots/step_NNNNNNN.{wigf,pgm}` at every `sample_every` driving periods.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::config::{config_from_table, set_key, RawDecoherence, RunConfig};
use super::formats::{diagnostics_csv, encode_panels, write_bytes, write_dump, write_heatmap};
use crate::diagnostics::{
    break_time, default_thresholds, field_distance, l2_norm, negativity_volume, Metric, RunDiagnostics,
    ScreeningVerdict,
};
use crate::dynamics::DiffusionSpec;
use crate::error::{ConfigError, Error, Result};
use crate::evolver::{Evolver, Mode, RunHooks};
use crate::phase_space::{init_gaussian, Moments, WignerField};

pub const CODE_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub final_field: WignerField,
    pub diagnostics: RunDiagnostics,
    pub n_steps: u64,
    pub dt: f64,
}

/// Step count and step length that land exactly on the configured final time.
pub fn step_plan(cfg: &RunConfig) -> (u64, f64) {
    Evolver::step_plan(0.0, cfg.t_final(), cfg.dt())
}

fn snapshot_interval(cfg: &RunConfig, dt: f64) -> u64 {
    ((cfg.evolve.sample_every * cfg.period() / dt).round() as u64).max(1)
}

pub fn manifest_text(cfg: &RunConfig) -> String {
    let (n_steps, dt) = step_plan(cfg);
    let mut out = String::new();
    let _ = writeln!(out, "# {CODE_VERSION}");
    let _ = writeln!(out, "# mode = {}", cfg.evolve.mode.as_str());
    let _ = writeln!(out, "# resolved diffusion D = {:e}", cfg.diffusion.coefficient());
    let _ = writeln!(out, "# driving period T = {:e}", cfg.period());
    let _ = writeln!(out, "# t_final = {:e}, steps = {n_steps}, dt = {dt:e}", cfg.t_final());
    let _ = writeln!(out, "# grid dx = {:e}, dp = {:e}", cfg.grid.dx(), cfg.grid.dp());
    out.push_str(&cfg.to_toml());
    out
}

/// Evolves the configured initial state; writes the run directory when `out` is given.
pub fn execute_run(cfg: &RunConfig, out: Option<&Path>) -> Result<RunOutcome> {
    let field = init_gaussian(&cfg.grid, &cfg.init)?;
    let evolver_cfg = cfg.evolver_config()?;
    let (n_steps, dt) = step_plan(cfg);
    let formats = cfg.formats;

    if let Some(dir) = out {
        create_dir(dir)?;
        write_bytes(&dir.join("manifest.toml"), manifest_text(cfg).as_bytes())?;
        if formats.wigf {
            write_dump(&field, &dir.join("initial.wigf"))?;
        }
        if formats.wigf || formats.pgm {
            create_dir(&dir.join("snapshots"))?;
        }
    }

    let snapshot_every = snapshot_interval(cfg, dt);
    let mut hooks = RunHooks::every(cfg.evolve.diagnostics_every);
    if let Some(dir) = out {
        let snapshots = dir.join("snapshots");
        if formats.wigf || formats.pgm {
            hooks = hooks.with_observer(snapshot_every, move |k, f| {
                let stem = snapshots.join(format!("step_{k:07}"));
                if formats.wigf {
                    write_dump(f, &stem.with_extension("wigf"))?;
                }
                if formats.pgm {
                    write_heatmap(f, &stem.with_extension("pgm"))?;
                }
                Ok(())
            });
        }
    }
    let mut evolver = Evolver::new(cfg.grid, evolver_cfg);
    let (final_field, diagnostics) = evolver.run(field, cfg.t_final(), &mut hooks)?;
    drop(hooks);

    if let Some(dir) = out {
        if formats.wigf {
            write_dump(&final_field, &dir.join("final.wigf"))?;
        }
        if formats.csv {
            write_bytes(&dir.join("diagnostics.csv"), diagnostics_csv(&diagnostics).as_bytes())?;
        }
        if formats.pgm {
            write_heatmap(&final_field, &dir.join("final.pgm"))?;
        }
    }
    Ok(RunOutcome {
        final_field,
        diagnostics,
        n_steps,
        dt,
    })
}

pub fn cmd_run(cfg: &RunConfig, out_dir: &Path) -> Result<RunOutcome> {
    execute_run(cfg, Some(out_dir))
}

pub const CLASSICAL_ISOLATED_BOUNDARY_LIMIT: f64 = 1.0;

/// The four runs behind a comparison; they differ only in mode and diffusion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    QuantumIsolated,
    ClassicalIsolated,
    QuantumDecohered,
    ClassicalDecohered,
}

impl Regime {
    pub const ALL: [Regime; 4] = [
        Regime::QuantumIsolated,
        Regime::ClassicalIsolated,
        Regime::QuantumDecohered,
        Regime::ClassicalDecohered,
    ];

    fn index(&self) -> usize {
        Regime::ALL.iter().position(|r| r == self).expect("regime listed")
    }

    pub fn dir_name(&self) -> &'static str {
        match self {
            Regime::QuantumIsolated => "quantum_isolated",
            Regime::ClassicalIsolated => "classical_isolated",
            Regime::QuantumDecohered => "quantum_decohered",
            Regime::ClassicalDecohered => "classical_decohered",
        }
    }

    pub fn mode(&self) -> Mode {
        match self {
            Regime::QuantumIsolated | Regime::QuantumDecohered => Mode::Quantum,
            _ => Mode::Classical,
        }
    }

    pub fn isolated(&self) -> bool {
        matches!(self, Regime::QuantumIsolated | Regime::ClassicalIsolated)
    }

    /// The base config specialised to this regime.
    ///
    /// Isolated classical flow filaments without bound, so its boundary monitor
    /// is relaxed to [`CLASSICAL_ISOLATED_BOUNDARY_LIMIT`]; the report records the
    /// boundary mass each regime ends with.
    pub fn configure(&self, base: &RunConfig) -> Result<RunConfig, ConfigError> {
        let mut raw = base.raw.clone();
        raw.evolve.mode = Some(self.mode().as_str().to_string());
        if *self == Regime::ClassicalIsolated {
            raw.evolve.boundary_mass_limit = Some(CLASSICAL_ISOLATED_BOUNDARY_LIMIT);
        }
        if self.isolated() {
            raw.decoherence = RawDecoherence {
                d: Some(0.0),
                ..Default::default()
            };
        }
        RunConfig::from_raw(raw)
    }
}

#[derive(Debug, Clone)]
pub struct CompareReport {
    pub d_iso_l1: f64,
    pub d_iso_l2: f64,
    pub d_dec_l1: f64,
    pub d_dec_l2: f64,
    pub negativity: [f64; 4],
    /// Final moments in [`Regime::ALL`] order.
    pub final_moments: [Moments; 4],
    /// Final boundary-frame mass in [`Regime::ALL`] order.
    pub boundary_mass: [f64; 4],
    pub break_time_isolated: Option<f64>,
    pub break_time_decohered: Option<f64>,
    pub verdict: ScreeningVerdict,
    pub diffusion: f64,
}

impl CompareReport {
    pub fn negativity_of(&self, regime: Regime) -> f64 {
        self.negativity[regime.index()]
    }

    pub fn moments_of(&self, regime: Regime) -> Moments {
        self.final_moments[regime.index()]
    }

    /// Final quantum negativity with decoherence over that without.
    pub fn negativity_suppression(&self) -> f64 {
        self.negativity_of(Regime::QuantumDecohered) / self.negativity_of(Regime::QuantumIsolated)
    }

    pub fn to_toml(&self) -> String {
        let opt = |t: Option<f64>| t.map_or("\"none\"".to_string(), |v| format!("{v:e}"));
        let v = &self.verdict;
        let mut out = String::new();
        let _ = writeln!(out, "# {CODE_VERSION} comparison report");
        let _ = writeln!(out, "diffusion = {:e}", self.diffusion);
        let _ = writeln!(out, "d_iso_l1 = {:e}", self.d_iso_l1);
        let _ = writeln!(out, "d_iso_l2 = {:e}", self.d_iso_l2);
        let _ = writeln!(out, "d_dec_l1 = {:e}", self.d_dec_l1);
        let _ = writeln!(out, "d_dec_l2 = {:e}", self.d_dec_l2);
        for (regime, n) in Regime::ALL.iter().zip(&self.negativity) {
            let _ = writeln!(out, "negativity_{} = {n:e}", regime.dir_name());
        }
        let _ = writeln!(out, "negativity_suppression = {:e}", self.negativity_suppression());
        for (regime, m) in Regime::ALL.iter().zip(&self.final_moments) {
            let _ = writeln!(
                out,
                "moments_{} = [{:e}, {:e}, {:e}, {:e}]",
                regime.dir_name(),
                m.mean_x,
                m.mean_p,
                m.var_x,
                m.var_p
            );
        }
        for (regime, b) in Regime::ALL.iter().zip(&self.boundary_mass) {
            let _ = writeln!(out, "boundary_mass_{} = {b:e}", regime.dir_name());
        }
        let _ = writeln!(out, "break_time_isolated = {}", opt(self.break_time_isolated));
        let _ = writeln!(out, "break_time_decohered = {}", opt(self.break_time_decohered));
        let _ = writeln!(out, "\n[verdict]");
        let _ = writeln!(out, "theta_high = {:e}", v.evidence.theta_high);
        let _ = writeln!(out, "theta_low = {:e}", v.evidence.theta_low);
        let _ = writeln!(out, "unconditional_relevance = {}", v.unconditional_relevance);
        let _ = writeln!(out, "conditional_irrelevance = {}", v.conditional_irrelevance);
        let _ = writeln!(out, "emergent = {}", v.emergent);
        out
    }
}

fn require_decoherence(cfg: &RunConfig) -> Result<(), ConfigError> {
    let d = cfg.diffusion.coefficient();
    if d > 0.0 {
        Ok(())
    } else {
        Err(ConfigError::InvalidValue {
            name: "decoherence.d",
            requirement: "positive for a comparison",
            value: d,
        })
    }
}

fn build_report(outcomes: &[RunOutcome; 4], cfg: &RunConfig) -> Result<CompareReport> {
    let [q_iso, c_iso, q_dec, c_dec] = outcomes;
    let d_iso_l2 = field_distance(&q_iso.final_field, &c_iso.final_field, Metric::L2)?;
    let (theta_high, theta_low) = default_thresholds(d_iso_l2, l2_norm(&c_iso.final_field));
    let verdict = crate::diagnostics::screening_report(
        &q_iso.final_field,
        &c_iso.final_field,
        &q_dec.final_field,
        &c_dec.final_field,
        theta_high,
        theta_low,
    )?;
    let eta = cfg.evolve.break_eta;
    Ok(CompareReport {
        d_iso_l1: field_distance(&q_iso.final_field, &c_iso.final_field, Metric::L1)?,
        d_iso_l2,
        d_dec_l1: field_distance(&q_dec.final_field, &c_dec.final_field, Metric::L1)?,
        d_dec_l2: verdict.evidence.d_dec,
        negativity: [q_iso, c_iso, q_dec, c_dec].map(|o| negativity_volume(&o.final_field)),
        final_moments: [
            Moments::of(&q_iso.final_field)?,
            Moments::of(&c_iso.final_field)?,
            Moments::of(&q_dec.final_field)?,
            Moments::of(&c_dec.final_field)?,
        ],
        boundary_mass: [q_iso, c_iso, q_dec, c_dec].map(|o| Evolver::boundary_mass(&o.final_field)),
        break_time_isolated: break_time(&q_iso.diagnostics, &c_iso.diagnostics, eta)?,
        break_time_decohered: break_time(&q_dec.diagnostics, &c_dec.diagnostics, eta)?,
        verdict,
        diffusion: cfg.diffusion.coefficient(),
    })
}

fn write_compare_outputs(report: &CompareReport, outcomes: &[RunOutcome; 4], cfg: &RunConfig, dir: &Path) -> Result<()> {
    write_bytes(&dir.join("report.toml"), report.to_toml().as_bytes())?;
    if cfg.formats.pgm {
        let panels = encode_panels(&[
            &outcomes[0].final_field,
            &outcomes[2].final_field,
            &outcomes[3].final_field,
        ]);
        write_bytes(&dir.join("panels.pgm"), &panels)?;
    }
    Ok(())
}

fn run_regime(base: &RunConfig, regime: Regime, out: Option<&Path>) -> Result<RunOutcome> {
    let cfg = regime.configure(base)?;
    let sub = out.map(|d| d.join(regime.dir_name()));
    execute_run(&cfg, sub.as_deref())
}

fn run_pair(base: &RunConfig, regimes: [Regime; 2], out: Option<&Path>) -> Result<[RunOutcome; 2]> {
    let (a, b) = rayon::join(
        || run_regime(base, regimes[0], out),
        || run_regime(base, regimes[1], out),
    );
    Ok([a?, b?])
}

/// Quantum and classical runs, isolated and decohered, plus the screening report.
///
/// The report and a three-panel heatmap (quantum isolated, quantum decohered,
/// classical decohered) go to `out` when given.
pub fn compare(cfg: &RunConfig, out: Option<&Path>) -> Result<(CompareReport, [RunOutcome; 4])> {
    require_decoherence(cfg)?;
    if let Some(dir) = out {
        create_dir(dir)?;
    }
    let [q_iso, c_iso] = run_pair(cfg, [Regime::QuantumIsolated, Regime::ClassicalIsolated], out)?;
    compare_with_isolated(cfg, [q_iso, c_iso], out)
}

fn compare_with_isolated(
    cfg: &RunConfig,
    isolated: [RunOutcome; 2],
    out: Option<&Path>,
) -> Result<(CompareReport, [RunOutcome; 4])> {
    let [q_dec, c_dec] = run_pair(cfg, [Regime::QuantumDecohered, Regime::ClassicalDecohered], out)?;
    let [q_iso, c_iso] = isolated;
    let outcomes = [q_iso, c_iso, q_dec, c_dec];
    let report = build_report(&outcomes, cfg)?;
    if let Some(dir) = out {
        write_compare_outputs(&report, &outcomes, cfg, dir)?;
    }
    Ok((report, outcomes))
}

pub fn cmd_compare(cfg: &RunConfig, out_dir: &Path) -> Result<CompareReport> {
    compare(cfg, Some(out_dir)).map(|(report, _)| report)
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub value: String,
    pub report: CompareReport,
}

pub const SWEEP_CSV_HEADER: &str = "value,d_iso,d_dec,final_negativity";

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = format!("{SWEEP_CSV_HEADER}\n");
    for row in rows {
        let r = &row.report;
        let _ = writeln!(
            out,
            "{},{:e},{:e},{:e}",
            row.value,
            r.d_iso_l2,
            r.d_dec_l2,
            r.negativity_of(Regime::QuantumDecohered)
        );
    }
    out
}

fn copy_dir(from: &Path, to: &Path) -> Result<()> {
    create_dir(to)?;
    for entry in fs::read_dir(from).map_err(|e| Error::io(from, e))? {
        let entry = entry.map_err(|e| Error::io(from, e))?;
        let target = to.join(entry.file_name());
        if entry.path().is_dir() {
            copy_dir(&entry.path(), &target)?;
        } else {
            fs::copy(entry.path(), &target).map_err(|e| Error::io(&target, e))?;
        }
    }
    Ok(())
}

/// One comparison per value of `key`, then `sweep.csv` in `out`.
///
/// Sweeping a `decoherence.*` key leaves the isolated pair unchanged, so it is
/// computed once and its run directories are copied into every value's folder.
pub fn sweep(table: &toml::Table, key: &str, values: &[String], out: Option<&Path>) -> Result<Vec<SweepRow>> {
    if values.is_empty() {
        return Err(ConfigError::Conflict("sweep needs at least one value".into()).into());
    }
    let configs: Vec<RunConfig> = values
        .iter()
        .map(|v| {
            let mut t = table.clone();
            set_key(&mut t, key, v)?;
            config_from_table(t)
        })
        .collect::<Result<_, ConfigError>>()?;
    for cfg in &configs {
        require_decoherence(cfg)?;
    }
    let subdir = |v: &str| out.map(|d| d.join(format!("{}={v}", key.replace('.', "_"))));
    if let Some(dir) = out {
        create_dir(dir)?;
    }

    let rows: Vec<SweepRow> = if key.starts_with("decoherence.") {
        let first = subdir(&values[0]);
        if let Some(dir) = &first {
            create_dir(dir)?;
        }
        let [q_iso, c_iso] = run_pair(
            &configs[0],
            [Regime::QuantumIsolated, Regime::ClassicalIsolated],
            first.as_deref(),
        )?;
        values
            .par_iter()
            .zip(&configs)
            .enumerate()
            .map(|(k, (value, cfg))| {
                let dir = subdir(value);
                if let (Some(dir), Some(src)) = (&dir, &first) {
                    if k > 0 {
                        for regime in [Regime::QuantumIsolated, Regime::ClassicalIsolated] {
                            copy_dir(&src.join(regime.dir_name()), &dir.join(regime.dir_name()))?;
                        }
                    }
                }
                let (report, _) = compare_with_isolated(cfg, [q_iso.clone(), c_iso.clone()], dir.as_deref())?;
                Ok(SweepRow {
                    value: value.clone(),
                    report,
                })
            })
            .collect::<Result<_>>()?
    } else {
        values
            .par_iter()
            .zip(&configs)
            .map(|(value, cfg)| {
                let (report, _) = compare(cfg, subdir(value).as_deref())?;
                Ok(SweepRow {
                    value: value.clone(),
                    report,
                })
            })
            .collect::<Result<_>>()?
    };

    if let Some(dir) = out {
        write_bytes(&dir.join("sweep.csv"), sweep_csv(&rows).as_bytes())?;
    }
    Ok(rows)
}

pub fn cmd_sweep(table: &toml::Table, key: &str, values: &[String], out_dir: &Path) -> Result<Vec<SweepRow>> {
    sweep(table, key, values, Some(out_dir))
}

/// Human-readable summary of a resolved config and its resolution limits.
pub fn info_text(cfg: &RunConfig) -> String {
    let (n_steps, dt) = step_plan(cfg);
    let g = &cfg.grid;
    let (x_min, x_max) = g.x_bounds();
    let (p_min, p_max) = g.p_bounds();
    let lambda_max = std::f64::consts::PI / g.dp();
    let k_max = std::f64::consts::PI / g.dx();
    let mut out = String::new();
    let _ = writeln!(out, "{CODE_VERSION}");
    let _ = writeln!(out, "grid        {} x {} on x in [{x_min}, {x_max}], p in [{p_min}, {p_max}]", g.nx(), g.np());
    let _ = writeln!(out, "spacing     dx = {:.6}, dp = {:.6}", g.dx(), g.dp());
    let _ = writeln!(out, "spectrum    k_max = {k_max:.4}, lambda_max = {lambda_max:.4}");
    let _ = writeln!(
        out,
        "coherence   longest resolved offset hbar*lambda_max = {:.4} (x extent {:.4})",
        cfg.params.hbar * lambda_max,
        x_max - x_min
    );
    let p = &cfg.params;
    let _ = writeln!(
        out,
        "params      m = {}, a = {}, b = {}, lambda = {}, omega = {}, hbar = {}",
        p.m, p.a, p.b, p.lambda, p.omega, p.hbar
    );
    let _ = writeln!(out, "period      T = {:.6}", cfg.period());
    let diffusion = match cfg.diffusion {
        DiffusionSpec::Direct { d } => format!("D = {d} (direct)"),
        DiffusionSpec::Derived { gamma, mass_env, kbt } => {
            format!("D = {} (2 * {gamma} * {mass_env} * {kbt})", cfg.diffusion.coefficient())
        }
    };
    let _ = writeln!(out, "diffusion   {diffusion}");
    let i = &cfg.init;
    let _ = writeln!(
        out,
        "init        x0 = {}, p0 = {}, sigma_x = {:.6}, sigma_p = {:.6}{}",
        i.x0,
        i.p0,
        i.sigma_x,
        i.sigma_p,
        if cfg.minimum_uncertainty { " (minimum uncertainty)" } else { "" }
    );
    let _ = writeln!(
        out,
        "time        t_final = {:.6} ({:.3} T), {n_steps} steps of dt = {dt:.6e} ({:.1} per period)",
        cfg.t_final(),
        cfg.t_final() / cfg.period(),
        cfg.period() / dt
    );
    let _ = writeln!(out, "mode        {}", cfg.evolve.mode.as_str());
    out
}

/// Default output directory: `--out`, then `output.dir`, then `./out`.
pub fn resolve_out_dir(cli: Option<&Path>, cfg: &RunConfig) -> PathBuf {
    cli.map(Path::to_path_buf)
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"))
}
