//! Ensemble-level description on small grids: density matrices, the
//! collapse kernel `Delta(x, x') = sum_n P_n(x) P_n(x')`, the one-shot
//! collapse map and the linear master equation
//! `d rho / dt = -i/hbar [H, rho] - gamma0 (1 - Delta) rho`
//! for a frozen, state-independent kernel.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{invalid, Error, Result};
use crate::localization::LocalizationPair;
use crate::propagator::Cayley;
use crate::wave::{Grid1D, ModelParams, Potential, WaveFunction, C64};

/// Largest grid accepted for density-matrix work.
pub const DENSMAT_MAX_POINTS: usize = 256;

fn guard(n: usize) -> Result<()> {
    if n > DENSMAT_MAX_POINTS {
        return Err(Error::GridTooLarge {
            n,
            max: DENSMAT_MAX_POINTS,
        });
    }
    Ok(())
}

/// `rho(x_i, x_j)`, row-major, with measure `dx` per index.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrixGrid {
    grid: Grid1D,
    rho: Vec<C64>,
}

impl DensityMatrixGrid {
    pub fn new(grid: Grid1D, rho: Vec<C64>) -> Result<Self> {
        guard(grid.len())?;
        if rho.len() != grid.len() * grid.len() {
            return Err(invalid("rho", "matrix size does not match the grid"));
        }
        Ok(DensityMatrixGrid { grid, rho })
    }

    /// `psi(x) psi*(x')`
    pub fn pure(psi: &WaveFunction) -> Result<Self> {
        let n = psi.grid().len();
        guard(n)?;
        let a = psi.amp();
        let mut rho = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                rho.push(a[i] * a[j].conj());
            }
        }
        Ok(DensityMatrixGrid {
            grid: psi.grid().clone(),
            rho,
        })
    }

    /// Thermal-like state `f(x) f(x') exp(-pi (x - x')^2 / lambda_t^2)` with a
    /// Gaussian envelope `f` of the given centre and width, normalized in 1D.
    pub fn thermal(grid: &Grid1D, center: f64, width: f64, lambda_t: f64) -> Result<Self> {
        guard(grid.len())?;
        if !(lambda_t > 0.0 && width > 0.0) {
            return Err(invalid("lambda_t", "thermal length and envelope width must be positive"));
        }
        let n = grid.len();
        let f: Vec<f64> = (0..n)
            .map(|i| {
                if i == 0 || i == n - 1 {
                    0.0
                } else {
                    (-(grid.x(i) - center).powi(2) / (4.0 * width * width)).exp()
                }
            })
            .collect();
        let mut rho = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let d = grid.x(i) - grid.x(j);
                rho.push(C64::new(f[i] * f[j] * (-std::f64::consts::PI * d * d / (lambda_t * lambda_t)).exp(), 0.0));
            }
        }
        let mut out = DensityMatrixGrid {
            grid: grid.clone(),
            rho,
        };
        let tr = out.trace();
        out.rho.iter_mut().for_each(|v| *v /= tr);
        Ok(out)
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.rho[i * self.len() + j]
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.rho
    }

    /// `sum_i rho_ii dx`
    pub fn trace(&self) -> f64 {
        let n = self.len();
        (0..n).map(|i| self.rho[i * n + i].re).sum::<f64>() * self.grid.dx()
    }

    /// `Tr rho^2 = sum_ij |rho_ij|^2 dx^2`
    pub fn purity(&self) -> f64 {
        let dx = self.grid.dx();
        self.rho.iter().map(|v| v.norm_sqr()).sum::<f64>() * dx * dx
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let n = self.len();
        (0..n).map(|i| self.rho[i * n + i].re).collect()
    }

    pub fn hermiticity_error(&self) -> f64 {
        let n = self.len();
        let mut err: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                err = err.max((self.rho[i * n + j] - self.rho[j * n + i].conj()).norm());
            }
        }
        err
    }

    /// Smallest eigenvalue of the operator (matrix times `dx`).
    pub fn min_eigenvalue(&self) -> f64 {
        let n = self.len();
        let dx = self.grid.dx();
        let m = DMatrix::from_fn(n, n, |i, j| {
            // symmetrize away rounding so the Hermitian solver applies
            0.5 * (self.rho[i * n + j] + self.rho[j * n + i].conj()) * dx
        });
        m.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Write `|rho(x, x')|` as CSV: header row of x values, then one row per
    /// `x` starting with `x` itself. Values carry 9 significant digits.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let n = self.len();
        let mut s = String::new();
        let xs: Vec<String> = self.grid.xs().map(|x| format!("{x:.8e}")).collect();
        let _ = writeln!(s, "x,{}", xs.join(","));
        for i in 0..n {
            s.push_str(&xs[i]);
            for j in 0..n {
                let _ = write!(s, ",{:.8e}", self.rho[i * n + j].norm());
            }
            s.push('\n');
        }
        std::fs::write(path, s).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

/// `Delta_ij`, symmetric, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct DeltaKernel {
    n: usize,
    data: Vec<f64>,
}

impl DeltaKernel {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// `Delta = 1` everywhere: the single trivial branch.
    pub fn identity(n: usize) -> Self {
        DeltaKernel {
            n,
            data: vec![1.0; n * n],
        }
    }
}

pub fn delta_kernel(pair: &LocalizationPair) -> Result<DeltaKernel> {
    let n = pair.p_l.len();
    guard(n)?;
    let (l, r) = (&pair.p_l, &pair.p_r);
    let mut data = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            data.push(l[i] * l[j] + r[i] * r[j]);
        }
    }
    Ok(DeltaKernel { n, data })
}

fn check_sizes(rho: &DensityMatrixGrid, kernel: &DeltaKernel) -> Result<()> {
    if kernel.n != rho.len() {
        return Err(invalid("kernel", "size does not match the density matrix"));
    }
    Ok(())
}

/// `rho_ij -> Delta_ij rho_ij`
pub fn collapse_map(rho: &DensityMatrixGrid, kernel: &DeltaKernel) -> Result<DensityMatrixGrid> {
    check_sizes(rho, kernel)?;
    let data = rho.rho.iter().zip(&kernel.data).map(|(r, d)| r * *d).collect();
    Ok(DensityMatrixGrid {
        grid: rho.grid.clone(),
        rho: data,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub enum Hamiltonian {
    /// `H = 0`: pure decay of the coherences.
    Zero,
    /// Kinetic term plus the given potential.
    Schrodinger(Potential),
}

/// Integrate the master equation from `t = 0` to `t_end` with the split
/// `decay(dt/2) . conj(U) . decay(dt/2)`, where `U` is the Cayley step.
pub fn evolve_master(
    rho: &DensityMatrixGrid,
    h: &Hamiltonian,
    kernel: &DeltaKernel,
    params: &ModelParams,
    dt: f64,
    t_end: f64,
) -> Result<DensityMatrixGrid> {
    let steps = (t_end / dt).round() as usize;
    evolve_master_between(rho, h, kernel, params, dt, 0, steps)
}

/// Steps `k0..k1` of [`evolve_master`]; step `k` covers `[k dt, (k+1) dt]`.
pub fn evolve_master_between(
    rho: &DensityMatrixGrid,
    h: &Hamiltonian,
    kernel: &DeltaKernel,
    params: &ModelParams,
    dt: f64,
    k0: usize,
    k1: usize,
) -> Result<DensityMatrixGrid> {
    check_sizes(rho, kernel)?;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(invalid("dt", format!("must be positive, got {dt}")));
    }
    let n = rho.len();
    let half: Vec<f64> = kernel
        .data
        .iter()
        .map(|d| (-params.gamma0 * (1.0 - d) * 0.5 * dt).exp())
        .collect();
    let mut cur = rho.rho.clone();
    let mut stepper = Cayley::new(&rho.grid, params);
    let mut col = vec![C64::new(0.0, 0.0); n];
    let mut tmp = vec![C64::new(0.0, 0.0); n * n];

    for k in k0..k1 {
        cur.iter_mut().zip(&half).for_each(|(r, f)| *r *= f);
        if let Hamiltonian::Schrodinger(v) = h {
            let vs = v.sample(&rho.grid, (k as f64 + 0.5) * dt);
            // A = U rho column by column, then rho' = (U A^dag)^dag.
            for _ in 0..2 {
                for j in 0..n {
                    for i in 0..n {
                        col[i] = cur[i * n + j];
                    }
                    stepper.step_with(&mut col, &vs, dt)?;
                    for i in 0..n {
                        tmp[j * n + i] = col[i].conj();
                    }
                }
                std::mem::swap(&mut cur, &mut tmp);
            }
        }
        cur.iter_mut().zip(&half).for_each(|(r, f)| *r *= f);
    }
    Ok(DensityMatrixGrid {
        grid: rho.grid.clone(),
        rho: cur,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::localization::trial_pair;
    use crate::wave::gaussian_packet;

    #[test]
    fn kernel_diagonal_and_flat_sides() {
        let g = Grid1D::new(-8.0, 8.0, 129).unwrap();
        let pair = trial_pair(&g, 0.0, 1.0).unwrap();
        let k = delta_kernel(&pair).unwrap();
        for i in 0..g.len() {
            assert!((k.get(i, i) - 1.0).abs() < 1e-15);
        }
        assert_eq!(k.get(g.nearest(-5.0), g.nearest(5.0)), 0.0);
        // inside the ramp Delta = cos(k (x - x'))
        let (i, j) = (g.nearest(-0.5), g.nearest(0.75));
        let kk = std::f64::consts::PI / 8.0;
        assert!((k.get(i, j) - (kk * (g.x(i) - g.x(j))).cos()).abs() < 1e-14);
    }

    #[test]
    fn conjugation_matches_pure_state_propagation() {
        let g = Grid1D::new(-8.0, 8.0, 96).unwrap();
        let params = ModelParams::natural(0.5);
        let psi = gaussian_packet(&g, -1.0, 1.0, 1.5).unwrap();
        let rho = DensityMatrixGrid::pure(&psi).unwrap();
        let out = evolve_master(&rho, &Hamiltonian::Schrodinger(Potential::Free), &DeltaKernel::identity(96), &params, 0.01, 0.2).unwrap();
        let mut p = psi.clone();
        let mut st = Cayley::new(&g, &params);
        for k in 0..20 {
            st.step(&mut p, &Potential::Free, k as f64 * 0.01, 0.01).unwrap();
        }
        let expect = DensityMatrixGrid::pure(&p).unwrap();
        let err = out.rho.iter().zip(&expect.rho).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-12, "{err}");
        assert!(out.hermiticity_error() < 1e-12);
    }

    #[test]
    fn thermal_state_is_valid() {
        let g = Grid1D::new(-8.0, 8.0, 128).unwrap();
        let t = DensityMatrixGrid::thermal(&g, 0.0, 2.0, 0.5).unwrap();
        assert!((t.trace() - 1.0).abs() < 1e-12);
        assert!(t.hermiticity_error() < 1e-15);
        assert!(t.min_eigenvalue() > -1e-8);
        assert!(t.purity() < 0.5);
    }

    #[test]
    fn guard_rejects_large_grids() {
        let g = Grid1D::new(-8.0, 8.0, 257).unwrap();
        let psi = gaussian_packet(&g, 0.0, 1.0, 0.0).unwrap();
        assert!(matches!(DensityMatrixGrid::pure(&psi), Err(Error::GridTooLarge { .. })));
    }
}
