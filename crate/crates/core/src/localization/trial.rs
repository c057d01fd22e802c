use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::wave::{Grid1D, ModelParams, WaveFunction};

/// Branches lighter than this are never sampled.
pub const MIN_BRANCH_WEIGHT: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    L,
    R,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairKind {
    /// Cosine ramp of half-width `2 lambda` around `x0`.
    Trial,
    /// Built from an angle field, `P_L = cos theta`, `P_R = sin theta`.
    Angle,
    /// `P_L = 1`, `P_R = 0`: the inert single-branch split.
    Trivial,
}

/// A binary localization pair sampled on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalizationPair {
    pub kind: PairKind,
    pub x0: f64,
    pub lambda: f64,
    pub p_l: Vec<f64>,
    pub p_r: Vec<f64>,
}

impl LocalizationPair {
    pub fn trivial(grid: &Grid1D) -> Self {
        LocalizationPair {
            kind: PairKind::Trivial,
            x0: f64::NAN,
            lambda: f64::NAN,
            p_l: vec![1.0; grid.len()],
            p_r: vec![0.0; grid.len()],
        }
    }

    pub fn envelope(&self, side: Side) -> &[f64] {
        match side {
            Side::L => &self.p_l,
            Side::R => &self.p_r,
        }
    }

    /// max_i |P_L^2 + P_R^2 - 1|
    pub fn completeness_error(&self) -> f64 {
        self.p_l
            .iter()
            .zip(&self.p_r)
            .map(|(l, r)| (l * l + r * r - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// Cosine-ramp trial pair: `P_L = 1` left of `x0 - 2 lambda`, `0` right of
/// `x0 + 2 lambda`, and `cos(pi/(8 lambda) (x - x0 + 2 lambda))` in between;
/// `P_R` is the complementary sine so the squares sum to one.
pub fn trial_pair(grid: &Grid1D, x0: f64, lambda: f64) -> Result<LocalizationPair> {
    check_ramp(grid, x0, lambda)?;
    let k = PI / (8.0 * lambda);
    let mut p_l = Vec::with_capacity(grid.len());
    let mut p_r = Vec::with_capacity(grid.len());
    for x in grid.xs() {
        let (l, r) = ramp_values(x - x0, lambda, k);
        p_l.push(l);
        p_r.push(r);
    }
    Ok(LocalizationPair {
        kind: PairKind::Trial,
        x0,
        lambda,
        p_l,
        p_r,
    })
}

pub(crate) fn check_ramp(grid: &Grid1D, x0: f64, lambda: f64) -> Result<()> {
    if !(lambda.is_finite() && 4.0 * lambda >= 3.0 * grid.dx()) {
        return Err(Error::RampUnderresolved {
            lambda,
            dx: grid.dx(),
        });
    }
    let (lo, hi) = (x0 - 2.0 * lambda, x0 + 2.0 * lambda);
    // A few ulps of slack so scan grids hitting the edge exactly are accepted.
    let eps = 1e-12 * grid.length();
    if lo < grid.x_min() - eps || hi > grid.x_max() + eps {
        return Err(Error::RampOutsideDomain { lo, hi });
    }
    Ok(())
}

#[inline]
pub(crate) fn ramp_values(u: f64, lambda: f64, k: f64) -> (f64, f64) {
    if u <= -2.0 * lambda {
        (1.0, 0.0)
    } else if u >= 2.0 * lambda {
        (0.0, 1.0)
    } else {
        let (s, c) = (k * (u + 2.0 * lambda)).sin_cos();
        (c, s)
    }
}

/// `(w_L, w_R)` with `w_n = integral P_n^2 rho dx`.
pub fn weights(psi: &WaveFunction, pair: &LocalizationPair) -> (f64, f64) {
    let g = psi.grid();
    let a = psi.amp();
    let wl = g.integrate_with(|i| pair.p_l[i] * pair.p_l[i] * a[i].norm_sqr());
    let wr = g.integrate_with(|i| pair.p_r[i] * pair.p_r[i] * a[i].norm_sqr());
    (wl, wr)
}

/// `p = <Psi| P_L P_R |Psi>`, in `[0, 1/2]` for a normalized state.
pub fn overlap_p(psi: &WaveFunction, pair: &LocalizationPair) -> f64 {
    let g = psi.grid();
    let a = psi.amp();
    g.integrate_with(|i| pair.p_l[i] * pair.p_r[i] * a[i].norm_sqr())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyCost {
    /// `(1/2m)(pi hbar / 8 lambda)^2` times the density inside the ramp; only
    /// defined for trial pairs.
    pub closed_form: Option<f64>,
    /// `hbar^2/2m integral rho sum_n (P_n')^2` with forward differences of the
    /// envelopes and the cell density `sqrt(rho_i rho_{i+1})`.
    pub gradient: f64,
}

/// Energy cost of the split computed both ways.
pub fn energy_cost(psi: &WaveFunction, pair: &LocalizationPair, params: &ModelParams) -> EnergyCost {
    let rho = psi.density();
    let g = psi.grid();
    let gradient = gradient_cost(g, &rho, pair, params);
    let closed_form = (pair.kind == PairKind::Trial).then(|| {
        let k = PI * params.hbar / (8.0 * pair.lambda);
        let inside = integrate_interval(g, &rho, pair.x0 - 2.0 * pair.lambda, pair.x0 + 2.0 * pair.lambda);
        k * k / (2.0 * params.m) * inside
    });
    EnergyCost {
        closed_form,
        gradient,
    }
}

pub(crate) fn gradient_cost(g: &Grid1D, rho: &[f64], pair: &LocalizationPair, params: &ModelParams) -> f64 {
    let dx = g.dx();
    let mut acc = 0.0;
    for i in 0..rho.len() - 1 {
        let dl = pair.p_l[i + 1] - pair.p_l[i];
        let dr = pair.p_r[i + 1] - pair.p_r[i];
        let d2 = dl * dl + dr * dr;
        if d2 != 0.0 {
            acc += (rho[i] * rho[i + 1]).sqrt() * d2;
        }
    }
    params.kinetic_prefactor() * acc / dx
}

/// Integral over `[a, b]` of the piecewise-linear interpolant of `f`.
pub(crate) fn integrate_interval(g: &Grid1D, f: &[f64], a: f64, b: f64) -> f64 {
    let (a, b) = (a.max(g.x_min()), b.min(g.x_max()));
    if b <= a {
        return 0.0;
    }
    let dx = g.dx();
    let ia = (((a - g.x_min()) / dx).floor() as usize).min(g.len() - 2);
    let ib = (((b - g.x_min()) / dx).ceil() as usize).clamp(1, g.len() - 1);
    let mut acc = 0.0;
    for i in ia..ib {
        let (xl, xr) = (g.x(i), g.x(i + 1));
        let lo = a.max(xl);
        let hi = b.min(xr);
        if hi <= lo {
            continue;
        }
        let at = |x: f64| f[i] + (f[i + 1] - f[i]) * (x - xl) / (xr - xl);
        acc += 0.5 * (at(lo) + at(hi)) * (hi - lo);
    }
    acc
}

/// Entropy of the two-outcome density matrix.
///
/// `p_overlap = None` gives the mixing entropy `-sum w log w` (outcomes
/// treated as orthogonal). With an overlap `p = <Psi|P_L P_R|Psi>` the
/// outcome density matrix has eigenvalues `(1 +- sqrt((w_L - w_R)^2 +
/// 4 p^2)) / 2`; for `w_L = w_R = 1/2` these are `1/2 +- p`.
pub fn entropy_gain(w_l: f64, w_r: f64, p_overlap: Option<f64>) -> f64 {
    match p_overlap {
        None => -(xlnx(w_l) + xlnx(w_r)),
        Some(p) => {
            let disc = ((w_l - w_r).powi(2) + 4.0 * p * p).sqrt().min(1.0);
            let hi = 0.5 * (1.0 + disc);
            let lo = 0.5 * (1.0 - disc);
            -(xlnx(hi) + xlnx(lo))
        }
    }
}

#[inline]
fn xlnx(w: f64) -> f64 {
    if w <= 0.0 {
        0.0
    } else {
        w * w.ln()
    }
}

/// A localization pair together with its score on a particular state.
#[derive(Clone, Debug, PartialEq)]
pub struct SplitBasis {
    pub pair: LocalizationPair,
    pub w_l: f64,
    pub w_r: f64,
    /// Energy cost, gradient form.
    pub d_e: f64,
    pub d_s: f64,
    pub p_overlap: f64,
}

impl SplitBasis {
    pub fn x0(&self) -> f64 {
        self.pair.x0
    }

    pub fn lambda(&self) -> f64 {
        self.pair.lambda
    }

    pub fn weight(&self, side: Side) -> f64 {
        match side {
            Side::L => self.w_l,
            Side::R => self.w_r,
        }
    }

    pub fn free_energy(&self, t0: f64) -> f64 {
        self.d_e - t0 * self.d_s
    }
}

/// Score `pair` on `psi`.
pub fn evaluate(
    psi: &WaveFunction,
    pair: LocalizationPair,
    params: &ModelParams,
    overlap_entropy: bool,
) -> Result<SplitBasis> {
    if pair.p_l.len() != psi.grid().len() || pair.p_r.len() != psi.grid().len() {
        return Err(invalid("pair", "envelope length does not match the grid"));
    }
    let (w_l, w_r) = weights(psi, &pair);
    let p = overlap_p(psi, &pair);
    let d_e = energy_cost(psi, &pair, params).gradient;
    let d_s = entropy_gain(w_l, w_r, overlap_entropy.then_some(p));
    Ok(SplitBasis {
        pair,
        w_l,
        w_r,
        d_e,
        d_s,
        p_overlap: p,
    })
}

#[cfg(test)]
mod tests {
    use std::f64::consts::{FRAC_1_SQRT_2, LN_2};

    use proptest::prelude::*;

    use super::*;
    use crate::wave::{gaussian_packet, C64};

    fn grid() -> Grid1D {
        Grid1D::new(-16.0, 16.0, 1024).unwrap()
    }

    #[test]
    fn ramp_centre_and_edges() {
        let g = Grid1D::new(-4.0, 4.0, 801).unwrap();
        let pair = trial_pair(&g, 0.0, 0.5).unwrap();
        let c = g.nearest(0.0);
        assert!((pair.p_l[c] - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((pair.p_r[c] - FRAC_1_SQRT_2).abs() < 1e-15);
        let left = g.nearest(-1.0);
        assert_eq!((pair.p_l[left], pair.p_r[left]), (1.0, 0.0));
        assert_eq!(pair.p_l[0], 1.0);
        assert_eq!(pair.p_r[800], 1.0);
    }

    #[test]
    fn ramp_errors() {
        let g = grid();
        assert!(matches!(
            trial_pair(&g, 0.0, 0.5 * g.dx()),
            Err(Error::RampUnderresolved { .. })
        ));
        assert!(matches!(
            trial_pair(&g, 15.5, 1.0),
            Err(Error::RampOutsideDomain { .. })
        ));
    }

    proptest! {
        #[test]
        fn squares_sum_to_one(x0 in -10.0f64..10.0, lambda in 0.03f64..2.5) {
            let pair = trial_pair(&grid(), x0, lambda).unwrap();
            prop_assert!(pair.completeness_error() < 1e-12);
            prop_assert!(pair.p_l.iter().chain(&pair.p_r).all(|&p| (0.0..=1.0).contains(&p)));
        }
    }

    #[test]
    fn weights_limits() {
        let g = grid();
        let psi = gaussian_packet(&g, -5.0, 1.0, 0.0).unwrap();
        let far = trial_pair(&g, 8.0, 0.5).unwrap();
        let (wl, wr) = weights(&psi, &far);
        assert!((wl - 1.0).abs() < 1e-12 && wr < 1e-12);

        // x = 0 is not a grid point; use a grid point as the centre.
        let x0 = g.x(g.nearest(0.0));
        let sym = WaveFunction::from_fn(g.clone(), |x| {
            C64::new((-((x - x0) / 1.0).powi(2)).exp(), 0.0)
        })
        .unwrap()
        .normalized()
        .unwrap();
        let pair = trial_pair(&g, x0, 0.7).unwrap();
        let (wl, wr) = weights(&sym, &pair);
        assert!((wl - 0.5).abs() < 1e-12 && (wr - 0.5).abs() < 1e-12);
    }

    #[test]
    fn uniform_density_cost() {
        // rho = c on a wide box; the ramp sits inside.
        let g = Grid1D::new(-5.0, 5.0, 4001).unwrap();
        let psi = WaveFunction::from_fn(g.clone(), |x| C64::new(if x.abs() < 4.5 { 1.0 } else { 0.0 }, 0.0))
            .unwrap()
            .normalized()
            .unwrap();
        let c = psi.density()[2000];
        let params = ModelParams::natural(0.5);
        let lambda = 0.3;
        let pair = trial_pair(&g, 0.1, lambda).unwrap();
        let cost = energy_cost(&psi, &pair, &params);
        let exact = (PI / (8.0 * lambda)).powi(2) / (2.0 * params.m) * c * 4.0 * lambda;
        assert!((cost.closed_form.unwrap() - exact).abs() / exact < 1e-12);
        assert!((cost.gradient - exact).abs() / exact < 1e-4);
    }

    #[test]
    fn empty_ramp_costs_nothing() {
        let g = grid();
        let psi = gaussian_packet(&g, -8.0, 0.5, 0.0).unwrap();
        let pair = trial_pair(&g, 6.0, 0.5).unwrap();
        let cost = energy_cost(&psi, &pair, &ModelParams::natural(1.0));
        assert!(cost.closed_form.unwrap() < 1e-300);
        assert!(cost.gradient < 1e-300);
    }

    #[test]
    fn closed_form_agrees_with_gradient_on_fine_grid() {
        let g = Grid1D::new(-10.0, 10.0, 40001).unwrap();
        let psi = gaussian_packet(&g, 0.3, 1.4, 2.0).unwrap();
        let params = ModelParams::natural(0.5);
        let pair = trial_pair(&g, 0.2, 0.44).unwrap();
        let cost = energy_cost(&psi, &pair, &params);
        let cf = cost.closed_form.unwrap();
        assert!((cf - cost.gradient).abs() / cf < 1e-6, "{cf} {}", cost.gradient);
    }

    #[test]
    fn entropy_values() {
        assert!((entropy_gain(0.5, 0.5, Some(0.0)) - LN_2).abs() < 1e-15);
        assert!((entropy_gain(0.5, 0.5, None) - LN_2).abs() < 1e-15);
        assert_eq!(entropy_gain(1.0, 0.0, None), 0.0);
        assert!(entropy_gain(0.5, 0.5, Some(0.5)).abs() < 1e-15);
        // w = 1/2 closed form in terms of p
        let p: f64 = 0.2;
        let exact = -(0.5 + p) * (0.5 + p).ln() - (0.5 - p) * (0.5 - p).ln();
        assert!((entropy_gain(0.5, 0.5, Some(p)) - exact).abs() < 1e-15);
        // overlap never increases the entropy
        assert!(entropy_gain(0.3, 0.7, Some(0.1)) < entropy_gain(0.3, 0.7, None));
    }

    #[test]
    fn overlap_limits() {
        let g = grid();
        let psi = gaussian_packet(&g, 0.0, 1.0, 0.0).unwrap();
        let half = LocalizationPair {
            kind: PairKind::Angle,
            x0: 0.0,
            lambda: 1.0,
            p_l: vec![FRAC_1_SQRT_2; g.len()],
            p_r: vec![FRAC_1_SQRT_2; g.len()],
        };
        assert!((overlap_p(&psi, &half) - 0.5).abs() < 1e-12);

        let two = WaveFunction::from_fn(g.clone(), |x| {
            C64::new((-(x - 6.0).powi(2)).exp() + (-(x + 6.0).powi(2)).exp(), 0.0)
        })
        .unwrap()
        .normalized()
        .unwrap();
        let sharp = trial_pair(&g, 0.0, g.dx()).unwrap();
        assert!(overlap_p(&two, &sharp) < 1e-6);

        // Wide ramp over a narrow packet: quadrature oracle for p.
        let wide = trial_pair(&g, 0.0, 3.0).unwrap();
        let rho = psi.density();
        let k = PI / 24.0;
        let oracle: f64 = g.xs().enumerate().map(|(i, x)| {
            let a = k * (x + 6.0);
            let v = if x.abs() < 6.0 { a.cos() * a.sin() } else { 0.0 };
            g.weight(i) * v * rho[i]
        }).sum();
        let p = overlap_p(&psi, &wide);
        assert!((p - oracle).abs() < 1e-12);
        assert!(p > 0.45 && p <= 0.5);
    }
}
