use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::collapse::left_occupation;
use crate::error::{invalid, Error, Result};
use crate::wave::{gaussian_packet, Grid1D, ModelParams, Potential, WaveFunction, C64};

/// Largest grid for which dense eigenstates are computed.
pub const EIGEN_MAX_POINTS: usize = 2049;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialState {
    /// `exp(-((x - x_c)/delta)^2 + i p0 x)`
    Gaussian { x_c: f64, delta: f64, p0: f64 },
    /// `c_+ phi(x - r) + c_- phi(x + r)` with Gaussian lobes of width `delta`
    /// and `|c_+|^2 = c_plus_sq`.
    TwoLobes { r: f64, delta: f64, c_plus_sq: f64 },
    /// Eigenstate `index` (0 = ground) of the Hamiltonian at t = 0.
    Eigenstate { index: usize },
    /// `(phi_0 + phi_1)/sqrt 2` with the relative sign putting the weight on
    /// the left.
    LeftPair,
    /// Ground state of a hard-walled box `[a, b]` inside the domain.
    BoxGround { a: f64, b: f64 },
}

impl InitialState {
    pub fn build(&self, grid: &Grid1D, params: &ModelParams, v: &Potential) -> Result<WaveFunction> {
        match *self {
            InitialState::Gaussian { x_c, delta, p0 } => gaussian_packet(grid, x_c, delta, p0),
            InitialState::TwoLobes { r, delta, c_plus_sq } => {
                if !(0.0..=1.0).contains(&c_plus_sq) {
                    return Err(invalid("c_plus_sq", format!("must lie in [0, 1], got {c_plus_sq}")));
                }
                let (cp, cm) = (c_plus_sq.sqrt(), (1.0 - c_plus_sq).sqrt());
                let plus = gaussian_packet(grid, r, delta, 0.0)?;
                let minus = gaussian_packet(grid, -r, delta, 0.0)?;
                let amp = plus.amp().iter().zip(minus.amp()).map(|(a, b)| a * cp + b * cm).collect();
                WaveFunction::new(grid.clone(), amp)?.normalized()
            }
            InitialState::Eigenstate { index } => {
                let mut states = eigenstates(grid, params, v, index + 1)?;
                Ok(states.swap_remove(index))
            }
            InitialState::LeftPair => {
                let s = eigenstates(grid, params, v, 2)?;
                let combine = |sign: f64| {
                    let amp = s[0].amp().iter().zip(s[1].amp()).map(|(a, b)| (a + b * sign) / 2f64.sqrt()).collect();
                    WaveFunction::new(grid.clone(), amp)
                };
                let plus = combine(1.0)?;
                if left_occupation(&plus, 0.0) >= 0.5 {
                    Ok(plus)
                } else {
                    combine(-1.0)
                }
            }
            InitialState::BoxGround { a, b } => {
                if !(grid.x_min() <= a && a < b && b <= grid.x_max()) {
                    return Err(invalid("box", format!("[{a}, {b}] must lie inside the domain")));
                }
                WaveFunction::from_fn(grid.clone(), |x| {
                    let v = if x > a && x < b { (PI * (x - a) / (b - a)).sin() } else { 0.0 };
                    C64::new(v, 0.0)
                })?
                .normalized()
            }
        }
    }
}

/// Lowest `count` eigenstates of the discrete Hamiltonian at `t = 0`, with
/// hard walls at the grid edges. Signs are fixed so that the first sample
/// above 1e-8 of the peak is positive.
pub fn eigenstates(grid: &Grid1D, params: &ModelParams, v: &Potential, count: usize) -> Result<Vec<WaveFunction>> {
    let n = grid.len();
    if n > EIGEN_MAX_POINTS {
        return Err(Error::GridTooLarge {
            n,
            max: EIGEN_MAX_POINTS,
        });
    }
    let m = n - 2;
    if count == 0 || count > m {
        return Err(invalid("count", format!("need 1..={m} eigenstates, asked for {count}")));
    }
    let hop = params.kinetic_prefactor() / (grid.dx() * grid.dx());
    let h = DMatrix::from_fn(m, m, |i, j| {
        if i == j {
            2.0 * hop + v.eval(grid.x(i + 1), 0.0)
        } else if i.abs_diff(j) == 1 {
            -hop
        } else {
            0.0
        }
    });
    let eig = h.symmetric_eigen();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    order
        .into_iter()
        .take(count)
        .map(|k| {
            let col = eig.eigenvectors.column(k);
            let peak = col.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
            let first = col.iter().find(|v| v.abs() > 1e-8 * peak).copied().unwrap_or(1.0);
            let sign = first.signum();
            let mut amp = vec![C64::new(0.0, 0.0); n];
            for i in 0..m {
                amp[i + 1] = C64::new(sign * col[i], 0.0);
            }
            WaveFunction::new(grid.clone(), amp)?.normalized()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wave::observables;

    #[test]
    fn box_eigenstates_match_the_discrete_spectrum() {
        let g = Grid1D::new(-1.0, 1.0, 129).unwrap();
        let p = ModelParams::natural(2.0);
        let s = eigenstates(&g, &p, &Potential::Free, 3).unwrap();
        let hop = p.kinetic_prefactor() / (g.dx() * g.dx());
        for (k, st) in s.iter().enumerate() {
            let q = (k + 1) as f64 * PI / 128.0;
            let exact = 2.0 * hop * (1.0 - q.cos());
            let e = observables(st, &p, &Potential::Free, 0.0).energy;
            assert!((e - exact).abs() < 1e-9 * exact, "{k}: {e} vs {exact}");
        }
    }

    #[test]
    fn left_pair_is_left_heavy() {
        let g = Grid1D::new(-1.0, 1.0, 257).unwrap();
        let p = ModelParams::natural(2.0);
        let v = Potential::DoubleWell {
            bump_width: 0.1,
            bump_height: 0.1,
        };
        let psi = InitialState::LeftPair.build(&g, &p, &v).unwrap();
        assert!((psi.norm_sqr() - 1.0).abs() < 1e-12);
        assert!(left_occupation(&psi, 0.0) > 0.9);
    }

    #[test]
    fn two_lobe_weights() {
        let g = Grid1D::new(-16.0, 16.0, 1024).unwrap();
        let p = ModelParams::natural(0.5);
        let psi = InitialState::TwoLobes {
            r: 6.0,
            delta: 1.0,
            c_plus_sq: 0.64,
        }
        .build(&g, &p, &Potential::Free)
        .unwrap();
        assert!((1.0 - left_occupation(&psi, 0.0) - 0.64).abs() < 1e-10);
    }
}
