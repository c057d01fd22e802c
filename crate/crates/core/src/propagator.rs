//! Unitary evolution with the Cayley (implicit midpoint / Crank-Nicolson)
//! form of the three-point Hamiltonian on a hard-walled grid.
//!
//! One step solves `(1 + i dt H / 2 hbar) psi' = (1 - i dt H / 2 hbar) psi`
//! on the interior samples. The map is exactly unitary in exact arithmetic
//! and commutes with a static `H`, so both norm and energy are conserved to
//! rounding.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::wave::{observables, Grid1D, ModelParams, Potential, WaveFunction, C64};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropagatorConfig {
    pub dt: f64,
}

impl PropagatorConfig {
    pub fn new(dt: f64) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(invalid("dt", format!("must be positive, got {dt}")));
        }
        Ok(PropagatorConfig { dt })
    }

    /// Take one probe step from `psi` and reject the time step if the energy
    /// of a static problem drifts by more than 1e-8 relative.
    pub fn probe(
        &self,
        psi: &WaveFunction,
        params: &ModelParams,
        v: &Potential,
    ) -> Result<()> {
        if !v.is_static() {
            return Ok(());
        }
        let mut stepper = Cayley::new(psi.grid(), params);
        let mut next = psi.clone();
        stepper.step(&mut next, v, 0.0, self.dt)?;
        let e0 = observables(psi, params, v, 0.0).energy;
        let e1 = observables(&next, params, v, self.dt).energy;
        let drift = (e1 - e0).abs() / e0.abs().max(f64::MIN_POSITIVE);
        if drift > 1e-8 {
            return Err(invalid(
                "dt",
                format!("probe step drifts energy by {drift:e} (limit 1e-8)"),
            ));
        }
        Ok(())
    }
}

/// Reusable Cayley stepper for one grid and mass.
#[derive(Clone, Debug)]
pub struct Cayley {
    hbar: f64,
    /// hbar^2 / (2 m dx^2)
    hop: f64,
    x: Vec<f64>,
    v: Vec<f64>,
    rhs: Vec<C64>,
    cprime: Vec<C64>,
}

impl Cayley {
    pub fn new(grid: &Grid1D, params: &ModelParams) -> Self {
        let dx = grid.dx();
        let n = grid.len();
        Cayley {
            hbar: params.hbar,
            hop: params.kinetic_prefactor() / (dx * dx),
            x: grid.xs().collect(),
            v: vec![0.0; n],
            rhs: vec![C64::new(0.0, 0.0); n],
            cprime: vec![C64::new(0.0, 0.0); n],
        }
    }

    /// Advance `psi` from `t` to `t + dt`; time-dependent potentials are
    /// sampled at the midpoint.
    pub fn step(&mut self, psi: &mut WaveFunction, v: &Potential, t: f64, dt: f64) -> Result<()> {
        let tm = t + 0.5 * dt;
        for (vi, &x) in self.v.iter_mut().zip(&self.x) {
            *vi = v.eval(x, tm);
        }
        let pot = std::mem::take(&mut self.v);
        let r = self.step_with(psi.amp_mut(), &pot, dt);
        self.v = pot;
        r
    }

    /// Cayley step on raw amplitudes with a pre-sampled potential. Edge
    /// samples are treated as walls and left at zero.
    pub fn step_with(&mut self, amp: &mut [C64], v: &[f64], dt: f64) -> Result<()> {
        let n = amp.len();
        debug_assert_eq!(n, v.len());
        let alpha = dt / (2.0 * self.hbar);
        let off = C64::new(0.0, -alpha * self.hop);
        let hop = self.hop;

        // rhs = (1 - i alpha H) amp on interior points
        for i in 1..n - 1 {
            let h = (2.0 * hop + v[i]) * amp[i] - hop * (amp[i - 1] + amp[i + 1]);
            self.rhs[i] = amp[i] - C64::new(0.0, alpha) * h;
        }

        // Thomas solve of (1 + i alpha H) y = rhs; sub = super = `off`.
        let diag = |i: usize| C64::new(1.0, alpha * (2.0 * hop + v[i]));
        let denom = diag(1);
        if denom.norm_sqr() == 0.0 {
            return Err(Error::LinearSolve(1));
        }
        let inv = denom.inv();
        self.cprime[1] = off * inv;
        self.rhs[1] *= inv;
        for i in 2..n - 1 {
            let denom = diag(i) - off * self.cprime[i - 1];
            if denom.norm_sqr() == 0.0 {
                return Err(Error::LinearSolve(i));
            }
            let inv = denom.inv();
            self.cprime[i] = off * inv;
            let r = (self.rhs[i] - off * self.rhs[i - 1]) * inv;
            self.rhs[i] = r;
        }
        amp[n - 2] = self.rhs[n - 2];
        for i in (1..n - 2).rev() {
            amp[i] = self.rhs[i] - self.cprime[i] * amp[i + 1];
        }
        amp[0] = C64::new(0.0, 0.0);
        amp[n - 1] = C64::new(0.0, 0.0);
        Ok(())
    }
}

/// One unitary step of `psi` under `v`.
pub fn step_unitary(
    psi: &WaveFunction,
    params: &ModelParams,
    v: &Potential,
    t: f64,
    dt: f64,
) -> Result<WaveFunction> {
    let mut out = psi.clone();
    Cayley::new(psi.grid(), params).step(&mut out, v, t, dt)?;
    Ok(out)
}

/// Evolve from `t0` to `t1`, calling `observer(t, psi)` at the start and then
/// every `snapshot_every` steps (0 disables intermediate snapshots). The final
/// state is always reported.
pub fn evolve(
    psi: &WaveFunction,
    params: &ModelParams,
    v: &Potential,
    t0: f64,
    t1: f64,
    cfg: &PropagatorConfig,
    snapshot_every: usize,
    mut observer: impl FnMut(f64, &WaveFunction),
) -> Result<WaveFunction> {
    if t1 < t0 {
        return Err(invalid("t1", format!("end time {t1} precedes start {t0}")));
    }
    let steps = ((t1 - t0) / cfg.dt).round() as usize;
    let mut stepper = Cayley::new(psi.grid(), params);
    let mut cur = psi.clone();
    observer(t0, &cur);
    for k in 0..steps {
        let t = t0 + k as f64 * cfg.dt;
        stepper.step(&mut cur, v, t, cfg.dt)?;
        let done = k + 1 == steps;
        if done || (snapshot_every > 0 && (k + 1) % snapshot_every == 0) {
            observer(t0 + (k + 1) as f64 * cfg.dt, &cur);
        }
    }
    Ok(cur)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::wave::gaussian_packet;

    fn free_setup() -> (Grid1D, ModelParams) {
        (Grid1D::new(-16.0, 16.0, 1024).unwrap(), ModelParams::natural(0.5))
    }

    #[test]
    fn zero_steps_is_identity() {
        let (g, p) = free_setup();
        let psi = gaussian_packet(&g, 0.0, 1.2, 1.0).unwrap();
        let cfg = PropagatorConfig::new(0.01).unwrap();
        let mut calls = 0;
        let out = evolve(&psi, &p, &Potential::Free, 1.0, 1.0, &cfg, 1, |_, _| calls += 1).unwrap();
        assert_eq!(out, psi);
        assert_eq!(calls, 1);
    }

    #[test]
    fn norm_is_preserved_per_step() {
        let (g, p) = free_setup();
        let mut psi = gaussian_packet(&g, -3.0, 1.0, 4.0).unwrap();
        let v = Potential::GrowingBump {
            bump_width: 1.0,
            rate: 3.0,
        };
        let mut st = Cayley::new(&g, &p);
        for k in 0..200 {
            let before = psi.norm_sqr();
            st.step(&mut psi, &v, k as f64 * 0.01, 0.01).unwrap();
            assert!((psi.norm_sqr() - before).abs() < 1e-12);
        }
    }

    #[test]
    fn time_reversal() {
        let (g, p) = free_setup();
        let psi = gaussian_packet(&g, 0.0, 1.5, 2.0).unwrap();
        let v = Potential::GaussianBarrier {
            amplitude: 1.0,
            a: 4.0,
        };
        let fwd = step_unitary(&psi, &p, &v, 0.0, 0.02).unwrap();
        let back = step_unitary(&fwd, &p, &v, 0.0, -0.02).unwrap();
        let err = psi
            .amp()
            .iter()
            .zip(back.amp())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-10, "{err}");
    }

    #[test]
    fn box_eigenstate_phase_rotates_at_eigenvalue() {
        // Exact discrete eigenvector sin(k pi i / (n-1)) of the three-point
        // Laplacian: E = (hbar^2 / m dx^2)(1 - cos(pi dx / L)).
        let g = Grid1D::new(0.0, 1.0, 257).unwrap();
        let p = ModelParams::natural(1.0);
        let dx = g.dx();
        let psi = WaveFunction::from_fn(g.clone(), |x| C64::new((PI * x).sin(), 0.0))
            .unwrap()
            .normalized()
            .unwrap();
        let e = (1.0 - (PI * dx).cos()) / (dx * dx);
        let dt = 1e-3;
        let steps = 500;
        let cfg = PropagatorConfig::new(dt).unwrap();
        let out = evolve(&psi, &p, &Potential::Free, 0.0, dt * steps as f64, &cfg, 0, |_, _| {}).unwrap();
        // Cayley phase per step is 2 atan(E dt / 2).
        let phase = -2.0 * (e * dt / 2.0).atan() * steps as f64;
        let expect = C64::from_polar(1.0, phase);
        for i in 1..g.len() - 1 {
            let r = out.amp()[i] / psi.amp()[i];
            assert!((r - expect).norm() < 1e-9);
        }
        // and close to the continuum E t
        assert!((phase + e * dt * steps as f64).abs() < 1e-5);
    }

    #[test]
    fn short_step_matches_euler_to_second_order() {
        let (g, p) = free_setup();
        let psi = gaussian_packet(&g, 0.0, 1.5, 1.0).unwrap();
        let mut errs = Vec::new();
        for dt in [1e-3, 5e-4] {
            let cay = step_unitary(&psi, &p, &Potential::Free, 0.0, dt).unwrap();
            let a = psi.amp();
            let c = p.kinetic_prefactor() / (g.dx() * g.dx());
            let mut diff = 0.0;
            for i in 1..g.len() - 1 {
                let h = c * (a[i] * 2.0 - a[i - 1] - a[i + 1]);
                let euler = a[i] - C64::new(0.0, dt) * h;
                diff += (cay.amp()[i] - euler).norm_sqr() * g.dx();
            }
            errs.push(diff.sqrt());
        }
        let order = (errs[0] / errs[1]).log2();
        assert!((order - 2.0).abs() < 0.1, "order {order}");
    }

    #[test]
    fn probe_accepts_default_step() {
        let (g, p) = free_setup();
        let psi = gaussian_packet(&g, 0.0, 1.18, 0.0).unwrap();
        let cfg = PropagatorConfig::new(2e-3).unwrap();
        cfg.probe(&psi, &p, &Potential::Free).unwrap();
        assert!(PropagatorConfig::new(0.0).is_err());
    }
}
