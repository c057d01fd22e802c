use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Physical constants of the model.
///
/// `gamma0` is the collapse rate (its inverse is the mean time between
/// collapse attempts) and `t0` the energy scale paying for localization.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub hbar: f64,
    pub m: f64,
    pub t0: f64,
    pub gamma0: f64,
}

impl ModelParams {
    pub fn new(hbar: f64, m: f64, t0: f64, gamma0: f64) -> Result<Self> {
        let p = ModelParams {
            hbar,
            m,
            t0,
            gamma0,
        };
        p.validate()?;
        Ok(p)
    }

    /// Simulation units: hbar = T0 = tau0 = 1.
    pub fn natural(m: f64) -> Self {
        ModelParams {
            hbar: 1.0,
            m,
            t0: 1.0,
            gamma0: 1.0,
        }
    }

    pub fn with_gamma0(self, gamma0: f64) -> Self {
        ModelParams { gamma0, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("hbar", self.hbar), ("m", self.m), ("t0", self.t0)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(name, format!("must be positive, got {v}")));
            }
        }
        // gamma0 = 0 is the collapse-free limit; negative rates are meaningless.
        if !(self.gamma0.is_finite() && self.gamma0 >= 0.0) {
            return Err(invalid("gamma0", format!("must be >= 0, got {}", self.gamma0)));
        }
        Ok(())
    }

    /// Thermal de Broglie length at the temperature `t0`.
    pub fn lambda0(&self) -> f64 {
        self.hbar * (2.0 * PI / (self.m * self.t0)).sqrt()
    }

    /// hbar^2 / 2m, the kinetic prefactor.
    pub fn kinetic_prefactor(&self) -> f64 {
        self.hbar * self.hbar / (2.0 * self.m)
    }
}
