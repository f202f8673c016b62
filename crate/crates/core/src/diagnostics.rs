//! Interference, divergence and screening-off measures on evolved fields.

use crate::error::NumericalError;
use crate::phase_space::{mass, Moments, WignerField};

/// Time series of the quantities tracked during a run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunDiagnostics {
    pub times: Vec<f64>,
    pub mean_x: Vec<f64>,
    pub mean_p: Vec<f64>,
    pub var_x: Vec<f64>,
    pub var_p: Vec<f64>,
    pub negativity: Vec<f64>,
    pub mass_series: Vec<f64>,
}

impl RunDiagnostics {
    pub fn record(&mut self, field: &WignerField) {
        let m = Moments::unchecked(field);
        self.times.push(field.time);
        self.mean_x.push(m.mean_x);
        self.mean_p.push(m.mean_p);
        self.var_x.push(m.var_x);
        self.var_p.push(m.var_p);
        self.negativity.push(negativity_volume(field));
        self.mass_series.push(mass(field));
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last_negativity(&self) -> Option<f64> {
        self.negativity.last().copied()
    }

    /// Largest `|mass(t) - mass(t0)|` over the series.
    pub fn max_mass_drift(&self) -> f64 {
        match self.mass_series.first() {
            Some(&m0) => self.mass_series.iter().fold(0.0, |acc, m| acc.max((m - m0).abs())),
            None => 0.0,
        }
    }
}

/// `int |f| - int f`: zero for a pointwise non-negative field.
pub fn negativity_volume(field: &WignerField) -> f64 {
    let grid = field.grid();
    let abs_sum: f64 = field.values().iter().map(|v| v.abs()).sum();
    abs_sum * grid.dx() * grid.dp() - mass(field)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    L1,
    L2,
}

pub fn field_distance(a: &WignerField, b: &WignerField, metric: Metric) -> Result<f64, NumericalError> {
    if a.grid() != b.grid() {
        return Err(NumericalError::GridMismatch);
    }
    let area = a.grid().cell_area();
    let pairs = a.values().iter().zip(b.values());
    Ok(match metric {
        Metric::L1 => pairs.map(|(u, v)| (u - v).abs()).sum::<f64>() * area,
        Metric::L2 => (pairs.map(|(u, v)| (u - v) * (u - v)).sum::<f64>() * area).sqrt(),
    })
}

/// First sampled time at which the quantum mean position leaves the classical
/// one by more than `eta` classical standard deviations.
pub fn break_time(quantum: &RunDiagnostics, classical: &RunDiagnostics, eta: f64) -> Result<Option<f64>, NumericalError> {
    if quantum.times != classical.times {
        return Err(NumericalError::TimeMismatch);
    }
    Ok(quantum
        .times
        .iter()
        .zip(quantum.mean_x.iter().zip(&classical.mean_x))
        .zip(&classical.var_x)
        .find(|((_, (q, c)), var)| (*q - *c).abs() > eta * var.max(0.0).sqrt())
        .map(|((&t, _), _)| t))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScreeningEvidence {
    pub d_iso: f64,
    pub d_dec: f64,
    pub theta_high: f64,
    pub theta_low: f64,
}

/// Screening-off verdict: the quantum term matters on its own (isolated runs
/// diverge) but not once decoherence is present (decohered runs agree).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScreeningVerdict {
    pub unconditional_relevance: bool,
    pub conditional_irrelevance: bool,
    pub emergent: bool,
    pub evidence: ScreeningEvidence,
}

impl ScreeningVerdict {
    pub fn from_distances(d_iso: f64, d_dec: f64, theta_high: f64, theta_low: f64) -> Self {
        let unconditional_relevance = d_iso > theta_high;
        let conditional_irrelevance = d_dec < theta_low;
        ScreeningVerdict {
            unconditional_relevance,
            conditional_irrelevance,
            emergent: unconditional_relevance && conditional_irrelevance,
            evidence: ScreeningEvidence {
                d_iso,
                d_dec,
                theta_high,
                theta_low,
            },
        }
    }
}

/// `(int f^2)^(1/2)`.
pub fn l2_norm(field: &WignerField) -> f64 {
    (field.values().iter().map(|v| v * v).sum::<f64>() * field.grid().cell_area()).sqrt()
}

/// Relative floor below which an isolated-pair distance counts as numerical noise.
pub const RELEVANCE_NOISE_FLOOR: f64 = 1e-6;

/// Default thresholds: `theta_high = 0.5 d_ref`, `theta_low = 0.1 d_ref`, where
/// `d_ref` is the isolated-pair distance of the same sweep. `theta_high` never
/// drops below `RELEVANCE_NOISE_FLOOR * field_scale`, so two runs that agree
/// to roundoff are not declared different.
pub fn default_thresholds(d_iso_reference: f64, field_scale: f64) -> (f64, f64) {
    (
        (0.5 * d_iso_reference).max(RELEVANCE_NOISE_FLOOR * field_scale),
        0.1 * d_iso_reference,
    )
}

pub fn screening_report(
    quantum_isolated: &WignerField,
    classical_isolated: &WignerField,
    quantum_decohered: &WignerField,
    classical_decohered: &WignerField,
    theta_high: f64,
    theta_low: f64,
) -> Result<ScreeningVerdict, NumericalError> {
    let fields = [classical_isolated, quantum_decohered, classical_decohered];
    if fields.iter().any(|f| f.grid() != quantum_isolated.grid()) {
        return Err(NumericalError::GridMismatch);
    }
    if fields.iter().any(|f| f.time != quantum_isolated.time) {
        return Err(NumericalError::TimeMismatch);
    }
    let d_iso = field_distance(quantum_isolated, classical_isolated, Metric::L2)?;
    let d_dec = field_distance(quantum_decohered, classical_decohered, Metric::L2)?;
    Ok(ScreeningVerdict::from_distances(d_iso, d_dec, theta_high, theta_low))
}
