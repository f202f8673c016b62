//! Driven anharmonic oscillator `H = p^2/2m + B x^4 - A x^2 + Lambda x cos(omega t)`.
//!
//! The drive enters with a plus sign on `Lambda`; some references write it
//! with the opposite sign, which is equivalent to shifting the drive phase by pi.

use std::f64::consts::PI;

use crate::error::ConfigError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    pub m: f64,
    pub a: f64,
    pub b: f64,
    pub lambda: f64,
    pub omega: f64,
    pub hbar: f64,
}

impl SystemParams {
    pub fn new(m: f64, a: f64, b: f64, lambda: f64, omega: f64, hbar: f64) -> Result<Self, ConfigError> {
        let positive = [("m", m), ("omega", omega), ("hbar", hbar)];
        for (name, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(ConfigError::InvalidValue {
                    name,
                    requirement: "positive and finite",
                    value,
                });
            }
        }
        if !(b >= 0.0 && b.is_finite()) {
            return Err(ConfigError::InvalidValue {
                name: "b",
                requirement: "non-negative and finite",
                value: b,
            });
        }
        for (name, value) in [("a", a), ("lambda", lambda)] {
            if !value.is_finite() {
                return Err(ConfigError::InvalidValue {
                    name,
                    requirement: "finite",
                    value,
                });
            }
        }
        if b == 0.0 && a > 0.0 {
            log::warn!("b = 0 with a > 0: the potential is unbounded below");
        }
        Ok(SystemParams {
            m,
            a,
            b,
            lambda,
            omega,
            hbar,
        })
    }

    /// Time-dependent potential `V(x, t)`.
    #[inline]
    pub fn potential(&self, x: f64, t: f64) -> f64 {
        let x2 = x * x;
        self.b * x2 * x2 - self.a * x2 + self.lambda * x * (self.omega * t).cos()
    }

    /// `dV/dx = 4 B x^3 - 2 A x + Lambda cos(omega t)`.
    #[inline]
    pub fn force_gradient(&self, x: f64, t: f64) -> f64 {
        4.0 * self.b * x * x * x - 2.0 * self.a * x + self.lambda * (self.omega * t).cos()
    }

    /// `d^3V/dx^3 = 24 B x`. Every higher odd derivative vanishes, so the
    /// quantum correction to the Liouville flow is a single third-order term.
    #[inline]
    pub fn third_derivative(&self, x: f64) -> f64 {
        24.0 * self.b * x
    }

    /// `V(x + a, t) - V(x - a, t)`, expanded so that no large terms cancel:
    /// `2a (4 B x^3 + 4 B x a^2 - 2 A x + Lambda cos(omega t))`.
    #[inline]
    pub fn odd_difference(&self, x: f64, a: f64, t: f64) -> f64 {
        2.0 * a * (self.force_gradient(x, t) + 4.0 * self.b * x * a * a)
    }

    /// Same parameters with the drive switched off.
    pub fn undriven(&self) -> Self {
        SystemParams {
            lambda: 0.0,
            ..*self
        }
    }

    pub fn driving_period(&self) -> f64 {
        2.0 * PI / self.omega
    }
}

/// Momentum-diffusion strength, either given or built from `D = 2 gamma M kT`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DiffusionSpec {
    Direct { d: f64 },
    Derived { gamma: f64, mass_env: f64, kbt: f64 },
}

impl DiffusionSpec {
    pub fn direct(d: f64) -> Result<Self, ConfigError> {
        if !(d >= 0.0 && d.is_finite()) {
            return Err(ConfigError::InvalidValue {
                name: "d",
                requirement: "non-negative and finite",
                value: d,
            });
        }
        Ok(DiffusionSpec::Direct { d })
    }

    pub fn derived(gamma: f64, mass_env: f64, kbt: f64) -> Result<Self, ConfigError> {
        for (name, value) in [("gamma", gamma), ("mass_env", mass_env), ("kbt", kbt)] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(ConfigError::InvalidValue {
                    name,
                    requirement: "positive and finite",
                    value,
                });
            }
        }
        Ok(DiffusionSpec::Derived {
            gamma,
            mass_env,
            kbt,
        })
    }

    pub fn none() -> Self {
        DiffusionSpec::Direct { d: 0.0 }
    }

    pub fn coefficient(&self) -> f64 {
        match *self {
            DiffusionSpec::Direct { d } => d,
            DiffusionSpec::Derived {
                gamma,
                mass_env,
                kbt,
            } => 2.0 * gamma * mass_env * kbt,
        }
    }
}
