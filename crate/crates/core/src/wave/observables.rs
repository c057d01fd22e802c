use serde::{Deserialize, Serialize};

use super::{ModelParams, Potential, WaveFunction};
use crate::error::{Error, Result};

/// Density below which `rho log rho` is taken as zero.
pub const RHO_LOG_FLOOR: f64 = 1e-300;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Observables {
    pub norm: f64,
    pub energy: f64,
    pub kinetic: f64,
    pub mean_x: f64,
    pub var_x: f64,
}

/// Norm, energy and position moments of `psi` under `v` at time `t`.
///
/// The kinetic term uses the same three-point Laplacian as the propagator,
/// so energies computed here are exactly the ones the Cayley step conserves.
pub fn observables(psi: &WaveFunction, params: &ModelParams, v: &Potential, t: f64) -> Observables {
    let grid = psi.grid();
    let a = psi.amp();
    let n = a.len();
    let dx = grid.dx();
    let norm = psi.norm_sqr();

    let mut kin = 0.0;
    for i in 1..n - 1 {
        let lap = a[i] * 2.0 - a[i - 1] - a[i + 1];
        kin += (a[i].conj() * lap).re;
    }
    let kinetic = params.kinetic_prefactor() * kin / dx;
    let potential = grid.integrate_with(|i| v.eval(grid.x(i), t) * a[i].norm_sqr());

    let m1 = grid.integrate_with(|i| grid.x(i) * a[i].norm_sqr()) / norm;
    let m2 = grid.integrate_with(|i| {
        let d = grid.x(i) - m1;
        d * d * a[i].norm_sqr()
    }) / norm;

    Observables {
        norm,
        energy: (kinetic + potential) / norm,
        kinetic: kinetic / norm,
        mean_x: m1,
        var_x: m2,
    }
}

/// `integral |psi|^2 log |psi|^2 dx`, the localization functional of a
/// single outcome.
pub fn s_prime(psi: &WaveFunction) -> f64 {
    let g = psi.grid();
    g.integrate_with(|i| xlogx(psi.amp()[i].norm_sqr()))
}

#[inline]
pub(crate) fn xlogx(rho: f64) -> f64 {
    if rho < RHO_LOG_FLOOR {
        0.0
    } else {
        rho * rho.ln()
    }
}

/// Weighted spread of a set of collapse outcomes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Spread {
    /// `sum_n w_n Var_x(Phi_n)`
    pub dr2: f64,
    /// `sum_n w_n integral |Phi_n|^2 log |Phi_n|^2`
    pub s_prime: f64,
}

pub fn ensemble_spread(branches: &[(f64, &WaveFunction)]) -> Result<Spread> {
    let total: f64 = branches.iter().map(|(w, _)| w).sum();
    if (total - 1.0).abs() > 1e-10 {
        return Err(Error::WeightMismatch(total));
    }
    let mut dr2 = 0.0;
    let mut sp = 0.0;
    for &(w, phi) in branches {
        let g = phi.grid();
        let rho = phi.density();
        let m1 = g.integrate_with(|i| g.x(i) * rho[i]);
        let m2 = g.integrate_with(|i| g.x(i) * g.x(i) * rho[i]);
        dr2 += w * (m2 - m1 * m1);
        sp += w * s_prime(phi);
    }
    Ok(Spread { dr2, s_prime: sp })
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::wave::{gaussian_packet, Grid1D, C64};

    #[test]
    fn gaussian_moments() {
        let g = Grid1D::new(-16.0, 16.0, 2048).unwrap();
        let delta = 1.3;
        let psi = gaussian_packet(&g, 0.0, delta, 0.0).unwrap();
        let o = observables(&psi, &ModelParams::natural(0.5), &Potential::Free, 0.0);
        assert!(o.mean_x.abs() < 1e-10);
        assert!((o.var_x - delta * delta / 4.0).abs() < 1e-10);
    }

    #[test]
    fn box_ground_state_energy() {
        // hbar = 1, m = 1, L = 2: E1 = pi^2 / 8.
        let g = Grid1D::new(-1.0, 1.0, 512).unwrap();
        let psi = WaveFunction::from_fn(g, |x| C64::new((PI * x / 2.0).cos(), 0.0))
            .unwrap()
            .normalized()
            .unwrap();
        let o = observables(&psi, &ModelParams::natural(1.0), &Potential::Free, 0.0);
        let exact = PI * PI / 8.0;
        assert!((o.energy - exact).abs() / exact < 1e-2);
    }

    #[test]
    fn kinetic_matches_gradient_quadrature() {
        // Independent check: hbar^2/2m * integral |psi'|^2 with an analytic derivative.
        let g = Grid1D::new(-12.0, 12.0, 4001).unwrap();
        let (delta, p0) = (1.1, 0.7);
        let psi = gaussian_packet(&g, 0.5, delta, p0).unwrap();
        let params = ModelParams::natural(0.5);
        let o = observables(&psi, &params, &Potential::Free, 0.0);
        let dpsi = |i: usize| {
            let x = g.x(i);
            psi.amp()[i] * C64::new(-2.0 * (x - 0.5) / (delta * delta), p0)
        };
        let grad2 = g.integrate_with(|i| dpsi(i).norm_sqr());
        let oracle = params.kinetic_prefactor() * grad2;
        // Closed form: hbar^2/2m (1/delta^2 + p0^2).
        let closed = params.kinetic_prefactor() * (1.0 / (delta * delta) + p0 * p0);
        assert!((oracle - closed).abs() / closed < 1e-6);
        assert!((o.kinetic - oracle).abs() / oracle < 1e-4);
    }

    #[test]
    fn spread_identity_and_disjoint_copies() {
        let g = Grid1D::new(-16.0, 16.0, 2048).unwrap();
        let psi = gaussian_packet(&g, 1.0, 0.8, 0.0).unwrap();
        let o = observables(&psi, &ModelParams::natural(1.0), &Potential::Free, 0.0);
        let s = ensemble_spread(&[(1.0, &psi)]).unwrap();
        assert!((s.dr2 - o.var_x).abs() < 1e-12);

        let left = gaussian_packet(&g, -6.0, 0.8, 0.0).unwrap();
        let right = gaussian_packet(&g, 6.0, 0.8, 0.0).unwrap();
        let s2 = ensemble_spread(&[(0.5, &left), (0.5, &right)]).unwrap();
        assert!((s2.dr2 - 0.8 * 0.8 / 4.0).abs() < 1e-10);

        assert!(matches!(
            ensemble_spread(&[(0.5, &left), (0.4, &right)]),
            Err(Error::WeightMismatch(_))
        ));
    }

    #[test]
    fn s_prime_of_box_states() {
        // rho = 1/L on [a, a + L], zero elsewhere. Use a fine grid and place the
        // box edges on grid points so the trapezoid rule is exact.
        let g = Grid1D::new(-4.0, 4.0, 8001).unwrap();
        let boxed = |half: f64| {
            let mut psi = WaveFunction::from_fn(g.clone(), |x| {
                C64::new(if x.abs() <= half + 1e-12 { 1.0 } else { 0.0 }, 0.0)
            })
            .unwrap();
            psi.normalize().unwrap();
            psi
        };
        let l1 = boxed(1.0);
        let l2 = boxed(2.0);
        // Half-weighted edge samples perturb the box at O(dx / L).
        assert!((s_prime(&l1) + (2.0f64).ln()).abs() < 2e-3);
        assert!((s_prime(&l2) - (s_prime(&l1) - (2.0f64).ln())).abs() < 2e-3);
    }
}
