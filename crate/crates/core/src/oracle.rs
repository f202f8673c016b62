//! Reference solutions independent of the spectral evolver: a Langevin
//! particle ensemble whose forward equation is the classical Fokker-Planck
//! equation, and closed forms for free and harmonic Gaussians.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::dynamics::{DiffusionSpec, SystemParams};
use crate::error::ConfigError;
use crate::evolver::Evolver;
use crate::phase_space::{GaussianSpec, PhaseSpaceGrid};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleSpec {
    pub n_particles: usize,
    pub seed: u64,
    pub dt: f64,
}

impl EnsembleSpec {
    pub fn new(n_particles: usize, seed: u64, dt: f64) -> Result<Self, ConfigError> {
        if n_particles == 0 {
            return Err(ConfigError::InvalidValue {
                name: "n_particles",
                requirement: "positive",
                value: 0.0,
            });
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(ConfigError::InvalidValue {
                name: "dt",
                requirement: "positive and finite",
                value: dt,
            });
        }
        Ok(EnsembleSpec { n_particles, seed, dt })
    }
}

/// Means and variances with their standard errors. Closed-form summaries
/// carry zero standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MomentSummary {
    pub mean_x: f64,
    pub mean_p: f64,
    pub var_x: f64,
    pub var_p: f64,
    pub se_mean_x: f64,
    pub se_mean_p: f64,
    pub se_var_x: f64,
    pub se_var_p: f64,
    pub n_used: usize,
    pub excluded: usize,
}

struct AxisStats {
    mean: f64,
    var: f64,
    se_mean: f64,
    se_var: f64,
}

fn axis_stats(samples: impl Iterator<Item = f64> + Clone, n: usize) -> AxisStats {
    let nf = n as f64;
    let mean = samples.clone().sum::<f64>() / nf;
    let (mut m2, mut m4) = (0.0, 0.0);
    for s in samples {
        let d2 = (s - mean) * (s - mean);
        m2 += d2;
        m4 += d2 * d2;
    }
    let var = m2 / (nf - 1.0);
    let m4 = m4 / nf;
    let pop_var = m2 / nf;
    AxisStats {
        mean,
        var,
        se_mean: (var / nf).sqrt(),
        se_var: ((m4 - pop_var * pop_var).max(0.0) / nf).sqrt(),
    }
}

/// Semi-implicit Euler-Maruyama integration of `dx = p/m dt`, `dp = -V'(x, t) dt + sqrt(2D) dW`
/// from a Gaussian cloud at `t = 0`: the momentum kick and noise come first, then
/// the drift uses the updated momentum.
///
/// Particle `i` draws from its own ChaCha stream `i` under `spec.seed`, and the
/// reduction runs in particle order, so the result does not depend on the
/// number of threads. Particles that wander beyond ten times the half-extent of
/// `bounds` (around its center) are dropped and counted in `excluded`.
pub fn langevin_run(
    spec: &EnsembleSpec,
    params: &SystemParams,
    diffusion: &DiffusionSpec,
    init: &GaussianSpec,
    t_final: f64,
    bounds: &PhaseSpaceGrid,
) -> MomentSummary {
    let (n_steps, dt) = Evolver::step_plan(0.0, t_final, spec.dt);
    let noise = (2.0 * diffusion.coefficient() * dt).sqrt();
    let (x_lo, x_hi) = bounds.x_bounds();
    let (p_lo, p_hi) = bounds.p_bounds();
    let (xc, xr) = (0.5 * (x_lo + x_hi), 5.0 * (x_hi - x_lo));
    let (pc, pr) = (0.5 * (p_lo + p_hi), 5.0 * (p_hi - p_lo));
    let inv_m = 1.0 / params.m;

    let finals: Vec<Option<(f64, f64)>> = (0..spec.n_particles)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            rng.set_stream(i as u64);
            let z: f64 = StandardNormal.sample(&mut rng);
            let mut x = init.x0 + init.sigma_x * z;
            let z: f64 = StandardNormal.sample(&mut rng);
            let mut p = init.p0 + init.sigma_p * z;
            for k in 0..n_steps {
                let t = k as f64 * dt;
                let z: f64 = if noise > 0.0 { StandardNormal.sample(&mut rng) } else { 0.0 };
                p += -params.force_gradient(x, t) * dt + noise * z;
                x += p * inv_m * dt;
                if (x - xc).abs() > xr || (p - pc).abs() > pr || !x.is_finite() || !p.is_finite() {
                    return None;
                }
            }
            Some((x, p))
        })
        .collect();

    let kept: Vec<(f64, f64)> = finals.iter().flatten().copied().collect();
    let excluded = finals.len() - kept.len();
    if excluded > 0 {
        log::warn!("{excluded} Langevin particles escaped and were excluded");
    }
    let n = kept.len();
    if n < 2 {
        return MomentSummary {
            n_used: n,
            excluded,
            ..Default::default()
        };
    }
    let sx = axis_stats(kept.iter().map(|s| s.0), n);
    let sp = axis_stats(kept.iter().map(|s| s.1), n);
    MomentSummary {
        mean_x: sx.mean,
        mean_p: sp.mean,
        var_x: sx.var,
        var_p: sp.var,
        se_mean_x: sx.se_mean,
        se_mean_p: sp.se_mean,
        se_var_x: sx.se_var,
        se_var_p: sp.se_var,
        n_used: n,
        excluded,
    }
}

/// Ballistic spreading of a Gaussian with no forces and no diffusion.
pub fn analytic_free_gaussian(init: &GaussianSpec, m: f64, t: f64) -> MomentSummary {
    MomentSummary {
        mean_x: init.x0 + init.p0 * t / m,
        mean_p: init.p0,
        var_x: init.sigma_x.powi(2) + (init.sigma_p * t / m).powi(2),
        var_p: init.sigma_p.powi(2),
        ..Default::default()
    }
}

/// Uncorrelated Gaussian in the potential `k x^2 / 2`: the center rotates
/// through phase space at `sqrt(k/m)`.
pub fn analytic_harmonic_gaussian(init: &GaussianSpec, m: f64, k: f64, t: f64) -> MomentSummary {
    let w = (k / m).sqrt();
    let (s, c) = (w * t).sin_cos();
    let mw = m * w;
    MomentSummary {
        mean_x: init.x0 * c + init.p0 / mw * s,
        mean_p: init.p0 * c - mw * init.x0 * s,
        var_x: (init.sigma_x * c).powi(2) + (init.sigma_p / mw * s).powi(2),
        var_p: (init.sigma_p * c).powi(2) + (mw * init.sigma_x * s).powi(2),
        ..Default::default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bounds() -> PhaseSpaceGrid {
        PhaseSpaceGrid::new(64, 64, -8.0, 8.0, -8.0, 8.0).unwrap()
    }

    #[test]
    fn free_gaussian_closed_form() {
        let init = GaussianSpec::new(0.5, -1.0, 0.3, 0.4).unwrap();
        let at0 = analytic_free_gaussian(&init, 2.0, 0.0);
        assert_eq!((at0.mean_x, at0.mean_p), (0.5, -1.0));
        assert!((at0.var_x - 0.09).abs() < 1e-15);
        let still = GaussianSpec::new(0.5, 0.0, 0.3, 0.4).unwrap();
        assert_eq!(analytic_free_gaussian(&still, 1.0, 7.0).mean_x, 0.5);
        let moving = GaussianSpec::new(0.0, 1.0, 0.3, 0.4).unwrap();
        assert_eq!(analytic_free_gaussian(&moving, 1.0, 2.0).mean_x, 2.0);
    }

    #[test]
    fn deterministic_harmonic_ensemble_follows_rotation() {
        let params = SystemParams::new(1.0, -0.5, 0.0, 0.0, 1.0, 0.1).unwrap();
        let init = GaussianSpec::new(1.0, 0.0, 0.2, 0.2).unwrap();
        let spec = EnsembleSpec::new(2000, 7, 1e-4).unwrap();
        let t = std::f64::consts::FRAC_PI_2;
        let s = langevin_run(&spec, &params, &DiffusionSpec::none(), &init, t, &bounds());
        let exact = analytic_harmonic_gaussian(&init, 1.0, 1.0, t);
        assert!((s.mean_x - exact.mean_x).abs() < 3.0 * s.se_mean_x, "{s:?}");
        assert!((s.mean_p - exact.mean_p).abs() < 3.0 * s.se_mean_p, "{s:?}");
        assert_eq!(s.excluded, 0);
    }

    #[test]
    fn pure_diffusion_variance_growth() {
        let params = SystemParams::new(1.0, 0.0, 0.0, 0.0, 1.0, 0.1).unwrap();
        let init = GaussianSpec::new(0.0, 0.0, 0.3, 0.3).unwrap();
        let spec = EnsembleSpec::new(20_000, 11, 0.01).unwrap();
        let d = 0.05;
        let s = langevin_run(&spec, &params, &DiffusionSpec::direct(d).unwrap(), &init, 1.0, &bounds());
        let expected = 0.09 + 2.0 * d;
        assert!((s.var_p - expected).abs() < 3.0 * s.se_var_p, "{s:?}");
    }

    #[test]
    fn fixed_seed_is_reproducible() {
        let params = SystemParams::new(1.0, 10.0, 0.5, 10.0, 6.07, 0.1).unwrap();
        let init = GaussianSpec::new(-3.0, 8.0, 0.2, 0.25).unwrap();
        let spec = EnsembleSpec::new(500, 3, 1e-3).unwrap();
        let diff = DiffusionSpec::direct(0.025).unwrap();
        let a = langevin_run(&spec, &params, &diff, &init, 1.0, &bounds());
        let b = langevin_run(&spec, &params, &diff, &init, 1.0, &bounds());
        assert_eq!(a, b);
    }

    #[test]
    fn escapes_are_counted() {
        let params = SystemParams::new(1.0, 0.0, 0.0, 0.0, 1.0, 0.1).unwrap();
        let init = GaussianSpec::new(0.0, 100.0, 0.1, 0.1).unwrap();
        let spec = EnsembleSpec::new(50, 1, 0.01).unwrap();
        let s = langevin_run(&spec, &params, &DiffusionSpec::none(), &init, 1.0, &bounds());
        assert_eq!(s.excluded, 50);
        assert_eq!(s.n_used, 0);
    }
}
