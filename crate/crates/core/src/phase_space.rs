//! Phase-space grid geometry and the sampled distribution f(x, p).
//!
//! Cells are centered: `x_i = x_min + (i + 1/2) dx`, `p_j = p_min + (j + 1/2) dp`.
//! Every integral in the crate uses the same midpoint rule (`sum * dx * dp`)
//! so identities such as `moment(f, 0, 0) == mass(f)` hold bit-for-bit.
//! Values are stored row-major with x as the slow index.

use std::f64::consts::PI;

use crate::error::{ConfigError, NumericalError};

/// Tolerance on the mass of a field before moments are meaningful.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-3;

/// Upper bound on Gaussian mass allowed to fall outside the domain.
pub const MAX_TAIL_MASS: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseSpaceGrid {
    nx: usize,
    np: usize,
    x_min: f64,
    x_max: f64,
    p_min: f64,
    p_max: f64,
}

impl PhaseSpaceGrid {
    pub fn new(
        nx: usize,
        np: usize,
        x_min: f64,
        x_max: f64,
        p_min: f64,
        p_max: f64,
    ) -> Result<Self, ConfigError> {
        for (name, value) in [("nx", nx), ("np", np)] {
            if value < 8 || !value.is_power_of_two() {
                return Err(ConfigError::GridSize { name, value });
            }
        }
        for (axis, min, max) in [("x", x_min, x_max), ("p", p_min, p_max)] {
            let spacing = (max - min) / 8.0;
            if !(max > min) || !spacing.is_finite() || !min.is_finite() || !max.is_finite() {
                return Err(ConfigError::DegenerateBounds { axis, min, max });
            }
        }
        let grid = PhaseSpaceGrid {
            nx,
            np,
            x_min,
            x_max,
            p_min,
            p_max,
        };
        for (axis, min, max, h) in [("x", x_min, x_max, grid.dx()), ("p", p_min, p_max, grid.dp())] {
            if !(h > 0.0 && h.is_finite()) {
                return Err(ConfigError::DegenerateBounds { axis, min, max });
            }
        }
        Ok(grid)
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn np(&self) -> usize {
        self.np
    }

    pub fn len(&self) -> usize {
        self.nx * self.np
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn x_bounds(&self) -> (f64, f64) {
        (self.x_min, self.x_max)
    }

    pub fn p_bounds(&self) -> (f64, f64) {
        (self.p_min, self.p_max)
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / self.nx as f64
    }

    pub fn dp(&self) -> f64 {
        (self.p_max - self.p_min) / self.np as f64
    }

    pub fn cell_area(&self) -> f64 {
        self.dx() * self.dp()
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + (i as f64 + 0.5) * self.dx()
    }

    pub fn p(&self, j: usize) -> f64 {
        self.p_min + (j as f64 + 0.5) * self.dp()
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.nx).map(|i| self.x(i)).collect()
    }

    pub fn ps(&self) -> Vec<f64> {
        (0..self.np).map(|j| self.p(j)).collect()
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.np + j
    }

    /// Same extent, twice the points along both axes.
    pub fn refined(&self) -> Self {
        PhaseSpaceGrid {
            nx: self.nx * 2,
            np: self.np * 2,
            ..*self
        }
    }
}

/// Gaussian initial condition; the Wigner function of a squeezed or coherent state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianSpec {
    pub x0: f64,
    pub p0: f64,
    pub sigma_x: f64,
    pub sigma_p: f64,
}

impl GaussianSpec {
    pub fn new(x0: f64, p0: f64, sigma_x: f64, sigma_p: f64) -> Result<Self, ConfigError> {
        for (name, value) in [("sigma_x", sigma_x), ("sigma_p", sigma_p)] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(ConfigError::InvalidValue {
                    name,
                    requirement: "positive and finite",
                    value,
                });
            }
        }
        for (name, value) in [("x0", x0), ("p0", p0)] {
            if !value.is_finite() {
                return Err(ConfigError::InvalidValue {
                    name,
                    requirement: "finite",
                    value,
                });
            }
        }
        Ok(GaussianSpec {
            x0,
            p0,
            sigma_x,
            sigma_p,
        })
    }

    /// Minimum-uncertainty state with the given position width; `sigma_p = hbar / (2 sigma_x)`.
    pub fn minimum_uncertainty(x0: f64, p0: f64, sigma_x: f64, hbar: f64) -> Result<Self, ConfigError> {
        Self::new(x0, p0, sigma_x, hbar / (2.0 * sigma_x))
    }

    pub fn check_minimum_uncertainty(&self, hbar: f64) -> Result<(), ConfigError> {
        let actual = self.sigma_x * self.sigma_p;
        let expected = hbar / 2.0;
        if (actual - expected).abs() > 1e-12 {
            return Err(ConfigError::NotMinimumUncertainty { expected, actual });
        }
        Ok(())
    }
}

/// Upper bound on the normal mass beyond `z` standard deviations (Mills ratio).
fn normal_tail_bound(z: f64) -> f64 {
    if z <= 0.0 {
        return 0.5;
    }
    (-0.5 * z * z).exp() / (z * (2.0 * PI).sqrt())
}

fn axis_leak(center: f64, sigma: f64, min: f64, max: f64) -> f64 {
    normal_tail_bound((center - min) / sigma) + normal_tail_bound((max - center) / sigma)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Position,
    Momentum,
}

/// A real distribution sampled on a [`PhaseSpaceGrid`]: either a Wigner
/// function (may go negative) or a classical density.
#[derive(Debug, Clone, PartialEq)]
pub struct WignerField {
    grid: PhaseSpaceGrid,
    values: Vec<f64>,
    pub time: f64,
}

impl WignerField {
    pub fn zeros(grid: PhaseSpaceGrid) -> Self {
        WignerField {
            grid,
            values: vec![0.0; grid.len()],
            time: 0.0,
        }
    }

    pub fn from_values(grid: PhaseSpaceGrid, values: Vec<f64>, time: f64) -> Option<Self> {
        (values.len() == grid.len()).then_some(WignerField { grid, values, time })
    }

    pub fn grid(&self) -> &PhaseSpaceGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    /// Whether the field is admissible as a classical density:
    /// `min >= -1e-9 * max|f|`.
    pub fn is_classically_admissible(&self) -> bool {
        self.min_value() >= -1e-9 * self.max_abs()
    }

    /// `a * self + b * other`, on the same grid.
    pub fn linear_combination(&self, a: f64, other: &WignerField, b: f64) -> Result<Self, NumericalError> {
        if self.grid != other.grid {
            return Err(NumericalError::GridMismatch);
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(u, v)| a * u + b * v)
            .collect();
        Ok(WignerField {
            grid: self.grid,
            values,
            time: self.time,
        })
    }

    pub(crate) fn require_normalized(&self) -> Result<(), NumericalError> {
        let m = mass(self);
        if (m - 1.0).abs() > NORMALIZATION_TOLERANCE || !m.is_finite() {
            return Err(NumericalError::Unnormalized { mass: m });
        }
        Ok(())
    }
}

/// Samples the Gaussian at cell centers and rescales to unit discrete mass.
pub fn init_gaussian(grid: &PhaseSpaceGrid, spec: &GaussianSpec) -> Result<WignerField, ConfigError> {
    let (x_min, x_max) = grid.x_bounds();
    let (p_min, p_max) = grid.p_bounds();
    let leak_x = axis_leak(spec.x0, spec.sigma_x, x_min, x_max);
    let leak_p = axis_leak(spec.p0, spec.sigma_p, p_min, p_max);
    if leak_x + leak_p >= MAX_TAIL_MASS {
        let (axis, leak) = if leak_x >= leak_p {
            ("x", leak_x)
        } else {
            ("p", leak_p)
        };
        return Err(ConfigError::DomainTooSmall { axis, leak });
    }

    let gx: Vec<f64> = grid
        .xs()
        .iter()
        .map(|x| (-(x - spec.x0).powi(2) / (2.0 * spec.sigma_x * spec.sigma_x)).exp())
        .collect();
    let gp: Vec<f64> = grid
        .ps()
        .iter()
        .map(|p| (-(p - spec.p0).powi(2) / (2.0 * spec.sigma_p * spec.sigma_p)).exp())
        .collect();
    let norm = 1.0 / (2.0 * PI * spec.sigma_x * spec.sigma_p);
    let mut values = Vec::with_capacity(grid.len());
    for wx in &gx {
        values.extend(gp.iter().map(|wp| norm * wx * wp));
    }
    let mut field = WignerField {
        grid: *grid,
        values,
        time: 0.0,
    };
    let scale = 1.0 / mass(&field);
    field.values.iter_mut().for_each(|v| *v *= scale);
    Ok(field)
}

/// `sum(values) * dx * dp`.
pub fn mass(field: &WignerField) -> f64 {
    let sum: f64 = field.values.iter().sum();
    sum * field.grid.dx() * field.grid.dp()
}

/// Raw phase-space moment `<x^a p^b>`.
pub fn moment(field: &WignerField, order_x: u32, order_p: u32) -> Result<f64, NumericalError> {
    field.require_normalized()?;
    Ok(raw_moment(field, order_x, order_p))
}

pub(crate) fn raw_moment(field: &WignerField, order_x: u32, order_p: u32) -> f64 {
    let grid = &field.grid;
    let xa: Vec<f64> = grid.xs().iter().map(|x| x.powi(order_x as i32)).collect();
    let pb: Vec<f64> = grid.ps().iter().map(|p| p.powi(order_p as i32)).collect();
    let mut sum = 0.0;
    for (row, wx) in field.values.chunks_exact(grid.np).zip(&xa) {
        for (f, wp) in row.iter().zip(&pb) {
            sum += f * wx * wp;
        }
    }
    sum * grid.dx() * grid.dp()
}

/// First and second central moments of a field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub mean_x: f64,
    pub mean_p: f64,
    pub var_x: f64,
    pub var_p: f64,
}

impl Moments {
    pub fn of(field: &WignerField) -> Result<Self, NumericalError> {
        field.require_normalized()?;
        Ok(Self::unchecked(field))
    }

    pub(crate) fn unchecked(field: &WignerField) -> Self {
        let grid = &field.grid;
        let xs = grid.xs();
        let ps = grid.ps();
        let (mut s0, mut sx, mut sp, mut sxx, mut spp) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (row, &x) in field.values.chunks_exact(grid.np).zip(&xs) {
            let mut r0 = 0.0;
            for (f, &p) in row.iter().zip(&ps) {
                r0 += f;
                sp += f * p;
                spp += f * p * p;
            }
            s0 += r0;
            sx += r0 * x;
            sxx += r0 * x * x;
        }
        let mean_x = sx / s0;
        let mean_p = sp / s0;
        Moments {
            mean_x,
            mean_p,
            var_x: sxx / s0 - mean_x * mean_x,
            var_p: spp / s0 - mean_p * mean_p,
        }
    }
}

/// Integrates out the other axis; the result is a density along `axis`.
pub fn marginal(field: &WignerField, axis: Axis) -> Vec<f64> {
    let grid = &field.grid;
    match axis {
        Axis::Position => field
            .values
            .chunks_exact(grid.np)
            .map(|row| row.iter().sum::<f64>() * grid.dp())
            .collect(),
        Axis::Momentum => {
            let mut out = vec![0.0; grid.np];
            for row in field.values.chunks_exact(grid.np) {
                out.iter_mut().zip(row).for_each(|(o, f)| *o += f);
            }
            out.iter_mut().for_each(|o| *o *= grid.dx());
            out
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid64() -> PhaseSpaceGrid {
        PhaseSpaceGrid::new(64, 64, -4.0, 4.0, -4.0, 4.0).unwrap()
    }

    #[test]
    fn grid_spacing() {
        let g = grid64();
        assert_eq!(g.dx(), 0.125);
        assert_eq!(g.dp(), 0.125);
        let g = PhaseSpaceGrid::new(8, 8, 0.0, 1.0, 0.0, 1.0).unwrap();
        assert_eq!((g.dx(), g.dp()), (0.125, 0.125));
        assert_eq!(g.x(0), 0.0625);
    }

    #[test]
    fn grid_rejects_bad_sizes_and_bounds() {
        assert_eq!(
            PhaseSpaceGrid::new(63, 64, -4.0, 4.0, -4.0, 4.0),
            Err(ConfigError::GridSize { name: "nx", value: 63 })
        );
        assert!(PhaseSpaceGrid::new(4, 4, -4.0, 4.0, -4.0, 4.0).is_err());
        assert!(PhaseSpaceGrid::new(8, 8, 1.0, 1.0, -4.0, 4.0).is_err());
        assert!(PhaseSpaceGrid::new(8, 8, -1.0, 1.0, 4.0, -4.0).is_err());
        assert!(PhaseSpaceGrid::new(8, 8, -1.0, f64::INFINITY, -4.0, 4.0).is_err());
    }

    #[test]
    fn gaussian_is_normalized_centered_and_nonnegative() {
        let g = grid64();
        let f = init_gaussian(&g, &GaussianSpec::new(1.0, 0.0, 0.3, 0.3).unwrap()).unwrap();
        assert!((mass(&f) - 1.0).abs() < 1e-12);
        assert!((moment(&f, 1, 0).unwrap() - 1.0).abs() < 1e-8);
        assert!(moment(&f, 0, 1).unwrap().abs() < 1e-8);
        assert!(f.min_value() >= 0.0);
        assert_eq!(f.time, 0.0);
    }

    #[test]
    fn gaussian_moments() {
        let g = PhaseSpaceGrid::new(128, 128, -6.0, 6.0, -6.0, 6.0).unwrap();
        let f = init_gaussian(&g, &GaussianSpec::new(1.0, -2.0, 0.4, 0.5).unwrap()).unwrap();
        assert!((moment(&f, 1, 0).unwrap() - 1.0).abs() < 1e-8);
        let var_p = moment(&f, 0, 2).unwrap() - moment(&f, 0, 1).unwrap().powi(2);
        assert!((var_p - 0.25).abs() < 1e-6, "{var_p}");
        let m = Moments::of(&f).unwrap();
        assert!((m.var_x - 0.16).abs() < 1e-6);
    }

    #[test]
    fn zeroth_moment_is_mass_exactly() {
        let g = grid64();
        let f = init_gaussian(&g, &GaussianSpec::new(0.2, 0.1, 0.5, 0.5).unwrap()).unwrap();
        assert_eq!(moment(&f, 0, 0).unwrap(), mass(&f));
    }

    #[test]
    fn tail_bound_names_axis() {
        let g = grid64();
        let err = init_gaussian(&g, &GaussianSpec::new(3.5, 0.0, 0.3, 0.3).unwrap()).unwrap_err();
        assert!(matches!(err, ConfigError::DomainTooSmall { axis: "x", .. }));
        let err = init_gaussian(&g, &GaussianSpec::new(0.0, 0.0, 0.3, 2.0).unwrap()).unwrap_err();
        assert!(matches!(err, ConfigError::DomainTooSmall { axis: "p", .. }));
    }

    #[test]
    fn zero_field() {
        let f = WignerField::zeros(grid64());
        assert_eq!(mass(&f), 0.0);
        assert!(marginal(&f, Axis::Position).iter().all(|&v| v == 0.0));
        assert!(matches!(moment(&f, 1, 0), Err(NumericalError::Unnormalized { .. })));
    }

    #[test]
    fn marginals_integrate_to_mass() {
        let g = grid64();
        let f = init_gaussian(&g, &GaussianSpec::new(-0.5, 0.5, 0.4, 0.6).unwrap()).unwrap();
        let mx: f64 = marginal(&f, Axis::Position).iter().sum::<f64>() * g.dx();
        let mp: f64 = marginal(&f, Axis::Momentum).iter().sum::<f64>() * g.dp();
        assert!((mx - 1.0).abs() < 1e-12);
        assert!((mp - 1.0).abs() < 1e-12);
    }

    #[test]
    fn minimum_uncertainty() {
        let s = GaussianSpec::minimum_uncertainty(0.0, 0.0, 0.2, 0.1).unwrap();
        assert!(s.check_minimum_uncertainty(0.1).is_ok());
        assert!(GaussianSpec::new(0.0, 0.0, 0.2, 0.3).unwrap().check_minimum_uncertainty(0.1).is_err());
        assert!(GaussianSpec::new(0.0, 0.0, 0.0, 0.3).is_err());
    }

    #[test]
    fn init_is_deterministic() {
        let g = grid64();
        let s = GaussianSpec::new(0.3, -0.2, 0.45, 0.55).unwrap();
        let a = init_gaussian(&g, &s).unwrap();
        let b = init_gaussian(&g, &s).unwrap();
        assert!(a.values().iter().zip(b.values()).all(|(u, v)| u.to_bits() == v.to_bits()));
    }
}
