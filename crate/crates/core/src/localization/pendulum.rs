//! Variational profiles for the equal-weight binary split.
//!
//! With `P_1 = cos theta`, `P_2 = sin theta` the constraint `P_1^2 + P_2^2 = 1`
//! is built in and the optimal angle obeys a pendulum-type equation. For the
//! `rho^2` functional the equation is `4 lambda^2 theta'' = sin 4 theta` with
//! the kink solution `cos 2 theta = -tanh(x / lambda)` and first integral
//! `2 lambda^2 theta'^2 + cos(4 theta) / 4 = 1/4`. For the `rho log rho`
//! functional it is `4 lambda^2 theta'' = sin 2 theta log cot theta`, whose
//! first integral is `lambda^2 theta'^2 = h(sin^2 theta) / 4` with `h` the
//! binary entropy.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, LN_2};

use serde::{Deserialize, Serialize};

use super::trial::{entropy_gain, LocalizationPair, PairKind};
use crate::error::{invalid, Error, Result};
use crate::wave::{Grid1D, ModelParams};

/// Splitting angle sampled on a grid; `theta` rises from 0 to pi/2.
#[derive(Clone, Debug, PartialEq)]
pub struct ThetaField {
    pub grid: Grid1D,
    pub theta: Vec<f64>,
    pub lambda: f64,
    pub x0: f64,
}

impl ThetaField {
    pub fn pair(&self) -> LocalizationPair {
        LocalizationPair {
            kind: PairKind::Angle,
            x0: self.x0,
            lambda: self.lambda,
            p_l: self.theta.iter().map(|t| t.cos()).collect(),
            p_r: self.theta.iter().map(|t| t.sin()).collect(),
        }
    }

    /// `cos 2 theta`, which is `P_L^2 - P_R^2`.
    pub fn cos2(&self) -> Vec<f64> {
        self.theta.iter().map(|t| (2.0 * t).cos()).collect()
    }
}

/// Kink solution `theta = arccos(-tanh((x - x0)/lambda)) / 2`.
pub fn pendulum_analytic(grid: &Grid1D, x0: f64, lambda: f64) -> Result<ThetaField> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(invalid("lambda", format!("must be positive, got {lambda}")));
    }
    let theta = grid.xs().map(|x| analytic_theta(x - x0, lambda)).collect();
    Ok(ThetaField {
        grid: grid.clone(),
        theta,
        lambda,
        x0,
    })
}

#[inline]
fn analytic_theta(u: f64, lambda: f64) -> f64 {
    // arccos(-tanh s) / 2 == atan(e^s), accurate in the tails
    (u / lambda).exp().atan()
}

/// Binary entropy `h(s) = -s ln s - (1-s) ln(1-s)` at `s = sin^2 theta`,
/// evaluated without cancellation near both ends.
#[inline]
fn binary_entropy_sin2(theta: f64) -> f64 {
    let (s, c) = theta.sin_cos();
    let (s2, c2) = (s * s, c * c);
    // ln(s^2) = ln(1 - c^2); pick the accurate branch for each term.
    let ls = if s2 < 0.5 { s2.ln() } else { (-c2).ln_1p() };
    let lc = if c2 < 0.5 { c2.ln() } else { (-s2).ln_1p() };
    -(if s2 > 0.0 { s2 * ls } else { 0.0 }) - (if c2 > 0.0 { c2 * lc } else { 0.0 })
}

/// Slope `theta'` of the entropy-functional profile at angle `theta`.
pub fn pendulum_entropy_slope(theta: f64, lambda: f64) -> f64 {
    binary_entropy_sin2(theta).max(0.0).sqrt() / (2.0 * lambda)
}

/// Entropy-functional profile with the diagnostics of its tails.
#[derive(Clone, Debug, PartialEq)]
pub struct EntropyThetaField {
    pub field: ThetaField,
    /// Angle cut-off `eps`: the tails are followed until `theta = eps`
    /// (left) and `pi/2 - eps` (right).
    pub cutoff: f64,
    /// `|x(pi/2 - eps) - x(eps)|` from quadrature of `dx = d theta / theta'`.
    pub support_width: f64,
    /// `theta'` at the cut-off angle.
    pub endpoint_slope: f64,
}

/// Number of Gauss-Legendre panels in `ln theta` for the width quadrature.
const WIDTH_PANELS: usize = 4096;

/// Solve `4 lambda^2 theta'' = sin 2 theta log cot theta` with
/// `theta(x0) = pi/4`, `theta -> 0` on the left and `pi/2` on the right.
///
/// The profile is obtained from the first integral, integrating
/// `theta' = sqrt(h(sin^2 theta)) / (2 lambda)` outward from the centre with
/// RK4; the support width between the cut-off angles comes from quadrature in
/// `theta`.
pub fn pendulum_entropy(grid: &Grid1D, x0: f64, lambda: f64, cutoff: f64) -> Result<EntropyThetaField> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(invalid("lambda", format!("must be positive, got {lambda}")));
    }
    if !(cutoff > 0.0 && cutoff < FRAC_PI_4) {
        return Err(invalid("cutoff", format!("must lie in (0, pi/4), got {cutoff}")));
    }

    // Left half: g(d) = theta(x0 - d), decreasing from pi/4. The right half
    // follows from theta(x0 + d) = pi/2 - g(d).
    let mut order: Vec<(f64, usize)> = grid.xs().enumerate().map(|(i, x)| ((x - x0).abs(), i)).collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut theta = vec![0.0; grid.len()];
    let mut d = 0.0;
    let mut g = FRAC_PI_4;
    let h_max = (grid.dx() / 8.0).min(lambda / 64.0);
    let rhs = |t: f64| -pendulum_entropy_slope(t, lambda);
    for &(target, i) in &order {
        while d < target {
            let h = (target - d).min(h_max);
            let k1 = rhs(g);
            let k2 = rhs((g + 0.5 * h * k1).max(0.0));
            let k3 = rhs((g + 0.5 * h * k2).max(0.0));
            let k4 = rhs((g + h * k3).max(0.0));
            g = (g + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)).max(0.0);
            d += h;
        }
        if !g.is_finite() {
            return Err(Error::NonConvergence(format!("profile diverged at distance {d}")));
        }
        theta[i] = if grid.x(i) <= x0 { g } else { FRAC_PI_2 - g };
    }

    let half = entropy_half_width(lambda, cutoff);
    Ok(EntropyThetaField {
        field: ThetaField {
            grid: grid.clone(),
            theta,
            lambda,
            x0,
        },
        cutoff,
        support_width: 2.0 * half,
        endpoint_slope: pendulum_entropy_slope(cutoff, lambda),
    })
}

/// `integral_{eps}^{pi/4} d theta / theta'` by 5-point Gauss-Legendre panels
/// in `u = ln theta`.
fn entropy_half_width(lambda: f64, eps: f64) -> f64 {
    const NODES: [f64; 5] = [
        0.0,
        -0.538_469_310_105_683_1,
        0.538_469_310_105_683_1,
        -0.906_179_845_938_664,
        0.906_179_845_938_664,
    ];
    const WEIGHTS: [f64; 5] = [
        0.568_888_888_888_888_9,
        0.478_628_670_499_366_5,
        0.478_628_670_499_366_5,
        0.236_926_885_056_189_1,
        0.236_926_885_056_189_1,
    ];
    let (a, b) = (eps.ln(), FRAC_PI_4.ln());
    let h = (b - a) / WIDTH_PANELS as f64;
    let f = |u: f64| {
        let t = u.exp();
        t / pendulum_entropy_slope(t, lambda)
    };
    let mut acc = 0.0;
    for k in 0..WIDTH_PANELS {
        let mid = a + (k as f64 + 0.5) * h;
        for (n, w) in NODES.iter().zip(WEIGHTS) {
            acc += w * f(mid + 0.5 * h * n);
        }
    }
    acc * 0.5 * h
}

/// Split position making the kink profile halve the density:
/// `integral tanh((x - x0)/lambda) rho dx = 0`, found by bisection.
pub fn center_condition(grid: &Grid1D, rho: &[f64], lambda: f64) -> Result<f64> {
    if rho.len() != grid.len() {
        return Err(invalid("rho", "length does not match the grid"));
    }
    if !(lambda > 0.0) {
        return Err(invalid("lambda", format!("must be positive, got {lambda}")));
    }
    if rho.iter().any(|&r| r < 0.0) || rho.iter().all(|&r| r == 0.0) {
        return Err(invalid("rho", "must be nonnegative and not identically zero"));
    }
    let imbalance = |x0: f64| grid.integrate_with(|i| ((grid.x(i) - x0) / lambda).tanh() * rho[i]);
    // Decreasing in x0; at the domain edges it has the sign of the interior.
    let (mut lo, mut hi) = (grid.x_min() - 40.0 * lambda, grid.x_max() + 40.0 * lambda);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if imbalance(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-14 * (1.0 + mid.abs()) {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntropyTarget {
    /// Budget `T0 log 2`, orthogonal outcomes.
    Log2,
    /// Budget `T0 dS(p)` with the overlap `p` of the kink profile.
    #[default]
    Overlap,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaSolution {
    pub lambda: f64,
    /// `q = integral sech^2((x - x0)/lambda) rho dx`
    pub q: f64,
    /// `p = (1/2) integral sech((x - x0)/lambda) rho dx`
    pub p: f64,
    /// Energy cost `hbar^2 q / (8 m lambda^2)` at the solution.
    pub d_e: f64,
    /// The budget was met already at the smallest resolvable width: the
    /// profile is effectively a step.
    pub step_limit: bool,
}

/// Kink width fixed by the free-energy budget
/// `hbar^2 q(lambda) / (8 m lambda^2) = T0 dS`.
///
/// The smallest width meeting the budget is returned: a geometric scan
/// upward from `3 dx / 4` brackets the first sign change, which is then
/// refined by bisection.
pub fn lambda_from_constraint(
    grid: &Grid1D,
    rho: &[f64],
    x0: f64,
    params: &ModelParams,
    target: EntropyTarget,
) -> Result<LambdaSolution> {
    if rho.len() != grid.len() {
        return Err(invalid("rho", "length does not match the grid"));
    }
    let eval = |lambda: f64| -> (f64, f64, f64) {
        let mut q = 0.0;
        let mut p = 0.0;
        for i in 0..grid.len() {
            if rho[i] == 0.0 {
                continue;
            }
            let s = (grid.x(i) - x0) / lambda;
            if s.abs() > 350.0 {
                continue;
            }
            let sech = 1.0 / s.cosh();
            q += grid.weight(i) * sech * sech * rho[i];
            p += grid.weight(i) * sech * rho[i];
        }
        let p = 0.5 * p;
        let d_e = params.hbar * params.hbar * q / (8.0 * params.m * lambda * lambda);
        (q, p, d_e)
    };
    let budget = |p: f64| match target {
        EntropyTarget::Log2 => params.t0 * LN_2,
        EntropyTarget::Overlap => params.t0 * entropy_gain(0.5, 0.5, Some(p.min(0.5))),
    };
    let excess = |lambda: f64| {
        let (_, p, d_e) = eval(lambda);
        d_e - budget(p)
    };
    let solution = |lambda: f64, step_limit: bool| {
        let (q, p, d_e) = eval(lambda);
        LambdaSolution {
            lambda,
            q,
            p,
            d_e,
            step_limit,
        }
    };

    let lo = 0.75 * grid.dx();
    let hi = grid.length();
    if excess(lo) <= 0.0 {
        return Ok(solution(lo, true));
    }
    let ratio = 10f64.powf(1.0 / 16.0);
    let mut a = lo;
    let mut b = lo * ratio;
    while excess(b) > 0.0 {
        a = b;
        b *= ratio;
        if b > hi {
            return Err(Error::NoRootInBracket { lo, hi });
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if excess(mid) > 0.0 {
            a = mid;
        } else {
            b = mid;
        }
        if b - a <= 1e-13 * b {
            break;
        }
    }
    Ok(solution(0.5 * (a + b), false))
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;

    /// Fourth-order central differences.
    fn d1(f: &[f64], h: f64, i: usize) -> f64 {
        (-f[i + 2] + 8.0 * f[i + 1] - 8.0 * f[i - 1] + f[i - 2]) / (12.0 * h)
    }
    fn d2(f: &[f64], h: f64, i: usize) -> f64 {
        (-f[i + 2] + 16.0 * f[i + 1] - 30.0 * f[i] + 16.0 * f[i - 1] - f[i - 2]) / (12.0 * h * h)
    }

    #[test]
    fn kink_is_centred_and_monotone() {
        let g = Grid1D::new(-10.0, 10.0, 2001).unwrap();
        let f = pendulum_analytic(&g, 0.0, 1.0).unwrap();
        assert!((f.theta[1000] - FRAC_PI_4).abs() < 1e-15);
        assert!(f.theta.windows(2).all(|w| w[1] >= w[0]));
        let c2 = f.cos2();
        for (i, x) in g.xs().enumerate() {
            assert!((c2[i] + x.tanh()).abs() < 1e-14);
        }
    }

    #[test]
    fn kink_satisfies_the_pendulum_equation() {
        for &lambda in &[0.5, 1.0, 2.0] {
            let g = Grid1D::new(-8.0 * lambda, 8.0 * lambda, 16001).unwrap();
            let f = pendulum_analytic(&g, 0.0, lambda).unwrap();
            let h = g.dx();
            let mut res: f64 = 0.0;
            let mut first: f64 = 0.0;
            for i in 2..g.len() - 2 {
                let t = f.theta[i];
                res = res.max((4.0 * lambda * lambda * d2(&f.theta, h, i) - (4.0 * t).sin()).abs());
                let tp = d1(&f.theta, h, i);
                first = first.max((2.0 * lambda * lambda * tp * tp + (4.0 * t).cos() / 4.0 - 0.25).abs());
            }
            assert!(res < 1e-8, "residual {res}");
            assert!(first < 1e-8, "first integral {first}");
        }
    }

    #[test]
    fn kink_halves_symmetric_density() {
        let g = Grid1D::new(-6.0, 6.0, 1201).unwrap();
        let rho: Vec<f64> = g.xs().map(|x| (-(x * x)).exp() / PI.sqrt()).collect();
        let f = pendulum_analytic(&g, 0.0, 0.7).unwrap();
        let w1 = g.integrate_with(|i| f.theta[i].cos().powi(2) * rho[i]);
        assert!((w1 - 0.5).abs() < 1e-8);
    }

    #[test]
    fn centring_symmetric_and_lobes() {
        let g = Grid1D::new(-10.0, 10.0, 2001).unwrap();
        let sym: Vec<f64> = g.xs().map(|x| (-(x - 0.0).powi(2)).exp() * (1.0 + x * x)).collect();
        assert!(center_condition(&g, &sym, 0.5).unwrap().abs() < 1e-10);

        let lobe = |x: f64, c: f64| (-(x - c).powi(2) / 0.02).exp();
        let two: Vec<f64> = g.xs().map(|x| lobe(x, -5.0) + lobe(x, 5.0)).collect();
        assert!(center_condition(&g, &two, 2.0).unwrap().abs() < 1e-10);

        let skew: Vec<f64> = g.xs().map(|x| 0.3 * lobe(x, -5.0) + 0.7 * lobe(x, 5.0)).collect();
        let x0 = center_condition(&g, &skew, 0.05).unwrap();
        assert!(x0 > 4.5 && x0 < 5.5, "x0 = {x0}");
        let imb = |x: f64| g.integrate_with(|i| ((g.x(i) - x) / 0.05).tanh() * skew[i]);
        assert!(imb(x0 - 1e-6) > 0.0 && imb(x0 + 1e-6) < 0.0);
    }

    #[test]
    fn uniform_density_width_is_linear_in_density() {
        // rho = rho_bar on a wide box: q = 2 lambda rho_bar and the budget
        // T0 log 2 gives lambda = hbar^2 rho_bar / (4 m T0 log 2).
        let params = ModelParams::natural(1.0);
        for &half in &[5.0, 10.0] {
            let g = Grid1D::new(-half - 1.0, half + 1.0, 200_001).unwrap();
            let rho: Vec<f64> = g.xs().map(|x| if x.abs() <= half { 1.0 / (2.0 * half) } else { 0.0 }).collect();
            let sol = lambda_from_constraint(&g, &rho, 0.0, &params, EntropyTarget::Log2).unwrap();
            let rho_bar = 1.0 / (2.0 * half);
            let exact = rho_bar / (4.0 * LN_2);
            assert!(!sol.step_limit);
            assert!((sol.lambda - exact).abs() / exact < 1e-5, "{} vs {exact}", sol.lambda);
        }
    }

    #[test]
    fn hard_gap_hits_step_limit() {
        let g = Grid1D::new(-10.0, 10.0, 2001).unwrap();
        let rho: Vec<f64> = g.xs().map(|x| if x.abs() > 3.0 && x.abs() < 7.0 { 0.125 } else { 0.0 }).collect();
        let sol = lambda_from_constraint(&g, &rho, 0.0, &ModelParams::natural(1.0), EntropyTarget::Overlap).unwrap();
        assert!(sol.step_limit);
        assert_eq!(sol.lambda, 0.75 * g.dx());
        assert_eq!(sol.q, 0.0);
    }

    #[test]
    fn entropy_profile_shape() {
        let g = Grid1D::new(-12.0, 12.0, 2401).unwrap();
        let e = pendulum_entropy(&g, 0.0, 1.0, 1e-8).unwrap();
        let f = &e.field;
        assert!((f.theta[1200] - FRAC_PI_4).abs() < 1e-12);
        assert!(f.theta.windows(2).all(|w| w[1] >= w[0]));
        // symmetry theta(-x) = pi/2 - theta(x)
        for i in 0..g.len() {
            assert!((f.theta[i] + f.theta[g.len() - 1 - i] - FRAC_PI_2).abs() < 1e-12);
        }
        // close to, but not the same as, the kink
        let kink = pendulum_analytic(&g, 0.0, 1.0).unwrap().cos2();
        let diff = f.cos2().iter().zip(&kink).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(diff > 1e-3 && diff < 0.3, "diff {diff}");
        assert!(e.endpoint_slope < 1e-6);
    }

    #[test]
    fn entropy_profile_satisfies_its_equation() {
        let lambda = 1.0;
        let g = Grid1D::new(-3.0, 3.0, 6001).unwrap();
        let f = pendulum_entropy(&g, 0.0, lambda, 1e-8).unwrap().field;
        let h = g.dx();
        let mut res: f64 = 0.0;
        for i in 2..g.len() - 2 {
            let t = f.theta[i];
            let rhs = (2.0 * t).sin() * (1.0 / t.tan()).ln();
            res = res.max((4.0 * lambda * lambda * d2(&f.theta, h, i) - rhs).abs());
        }
        assert!(res < 1e-6, "residual {res}");
    }
}
