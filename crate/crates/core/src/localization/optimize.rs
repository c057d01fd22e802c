use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::trial::{check_ramp, entropy_gain, evaluate, ramp_values, trial_pair, SplitBasis, MIN_BRANCH_WEIGHT};
use crate::exec::Exec;
use crate::wave::{Grid1D, ModelParams, WaveFunction};

/// Fixed ramp widths used by the presets, as fractions of lambda0.
pub const LAMBDA_PRESET_OPEN: f64 = 1.0 / 8.0;
pub const LAMBDA_PRESET_DOUBLE_WELL: f64 = 1.0 / 16.0;
pub const LAMBDA_PRESET_FINE: f64 = 1.0 / 32.0;

/// Candidate splits only sit where the density is below this fraction of
/// its maximum.
const TROUGH_FRACTION: f64 = 0.9;
const LAMBDA_POINTS_PER_DECADE: f64 = 16.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scan", rename_all = "snake_case")]
pub enum ScanMode {
    /// Vary the split position at fixed ramp half-width.
    X0 { lambda: f64 },
    /// Vary the ramp half-width at a fixed split position.
    Lambda { x0: f64 },
    /// Vary both.
    Both,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntropyForm {
    /// `-sum w log w`, outcomes treated as orthogonal.
    Mixing,
    /// Von Neumann entropy of the outcome density matrix, including the
    /// overlap of the two outcomes.
    #[default]
    Overlap,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub mode: ScanMode,
    #[serde(default)]
    pub entropy: EntropyForm,
    /// Free-energy tolerance in units of T0 within which candidates count as
    /// tied.
    #[serde(default = "default_tol")]
    pub tol_f: f64,
    #[serde(skip)]
    pub exec: Exec,
}

fn default_tol() -> f64 {
    1e-9
}

impl OptimizerConfig {
    pub fn new(mode: ScanMode) -> Self {
        OptimizerConfig {
            mode,
            entropy: EntropyForm::Overlap,
            tol_f: default_tol(),
            exec: Exec::default(),
        }
    }

    pub fn with_entropy(self, entropy: EntropyForm) -> Self {
        OptimizerConfig { entropy, ..self }
    }

    pub fn with_exec(self, exec: Exec) -> Self {
        OptimizerConfig { exec, ..self }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SplitOutcome {
    Split(SplitBasis),
    /// No admissible split: the state is left as it is.
    NoSplit,
}

impl SplitOutcome {
    pub fn is_split(&self) -> bool {
        matches!(self, SplitOutcome::Split(_))
    }
}

/// Grid points where a split may be placed for a ramp of half-width `lambda`.
pub fn candidate_x0s(grid: &Grid1D, rho: &[f64], lambda: f64) -> Vec<f64> {
    let max = rho.iter().cloned().fold(0.0, f64::max);
    let (lo, hi) = (grid.x_min() + 2.0 * lambda, grid.x_max() - 2.0 * lambda);
    (0..grid.len())
        .filter(|&i| rho[i] < TROUGH_FRACTION * max)
        .map(|i| grid.x(i))
        .filter(|&x| x >= lo && x <= hi)
        .collect()
}

/// Geometric ramp widths, 16 per decade, from `3 dx / 4` up to lambda0.
pub fn lambda_scan(grid: &Grid1D, params: &ModelParams) -> Vec<f64> {
    let lo = 0.75 * grid.dx();
    let hi = params.lambda0();
    let mut out = Vec::new();
    let mut k = 0;
    loop {
        let l = lo * 10f64.powf(k as f64 / LAMBDA_POINTS_PER_DECADE);
        if l > hi * (1.0 + 1e-12) {
            break;
        }
        out.push(l);
        k += 1;
    }
    out
}

#[derive(Clone, Copy, Debug)]
struct Scored {
    x0: f64,
    lambda: f64,
    d_f: f64,
}

/// Density-derived arrays shared by every candidate of one scan.
struct ScanContext<'a> {
    grid: &'a Grid1D,
    rho: Vec<f64>,
    cell_rho: Vec<f64>,
    /// prefix[i] = sum_{j < i} w_j rho_j
    prefix: Vec<f64>,
    /// suffix[i] = sum_{j >= i} w_j rho_j
    suffix: Vec<f64>,
    params: &'a ModelParams,
    overlap: bool,
}

impl<'a> ScanContext<'a> {
    fn new(psi: &'a WaveFunction, params: &'a ModelParams, overlap: bool) -> Self {
        let grid = psi.grid();
        let rho = psi.density();
        let n = rho.len();
        let cell_rho = (0..n - 1).map(|i| (rho[i] * rho[i + 1]).sqrt()).collect();
        let mut prefix = vec![0.0; n + 1];
        for i in 0..n {
            prefix[i + 1] = prefix[i] + grid.weight(i) * rho[i];
        }
        let mut suffix = vec![0.0; n + 1];
        for i in (0..n).rev() {
            suffix[i] = suffix[i + 1] + grid.weight(i) * rho[i];
        }
        ScanContext {
            grid,
            rho,
            cell_rho,
            prefix,
            suffix,
            params,
            overlap,
        }
    }

    /// Free energy of the trial split at `(x0, lambda)`, or `None` when the
    /// split is not admissible as a candidate.
    fn score(&self, x0: f64, lambda: f64) -> Option<Scored> {
        if check_ramp(self.grid, x0, lambda).is_err() {
            return None;
        }
        let g = self.grid;
        let n = self.rho.len();
        let dx = g.dx();
        let k = PI / (8.0 * lambda);
        // first index strictly inside the ramp, last index strictly inside
        let lo_f = ((x0 - 2.0 * lambda - g.x_min()) / dx).floor();
        let hi_f = ((x0 + 2.0 * lambda - g.x_min()) / dx).ceil();
        let i_lo = (lo_f.max(0.0) as usize).min(n - 1);
        let i_hi = (hi_f.max(0.0) as usize).min(n - 1);

        let mut w_l = self.prefix[i_lo];
        let mut w_r = self.suffix[i_hi + 1];
        let mut p = 0.0;
        let mut grad = 0.0;
        let mut prev = ramp_values(g.x(i_lo) - x0, lambda, k);
        for i in i_lo..=i_hi {
            let (l, r) = if i == i_lo { prev } else { ramp_values(g.x(i) - x0, lambda, k) };
            let wr = g.weight(i) * self.rho[i];
            w_l += wr * l * l;
            w_r += wr * r * r;
            p += wr * l * r;
            if i > i_lo {
                let (dl, dr) = (l - prev.0, r - prev.1);
                grad += self.cell_rho[i - 1] * (dl * dl + dr * dr);
            }
            prev = (l, r);
        }
        if w_l.min(w_r) < MIN_BRANCH_WEIGHT {
            return None;
        }
        let d_e = self.params.kinetic_prefactor() * grad / dx;
        let d_s = entropy_gain(w_l, w_r, self.overlap.then_some(p));
        Some(Scored {
            x0,
            lambda,
            d_f: d_e - self.params.t0 * d_s,
        })
    }
}

/// Find the binary trial split minimizing `dF = dE - T0 dS`.
///
/// Only splits with `dF <= 0` are admissible; otherwise the outcome is
/// [`SplitOutcome::NoSplit`]. Admissible candidates within `tol_f T0` of the
/// minimum are treated as equivalent and one is drawn uniformly from `rng`;
/// no random number is consumed when the minimum is unique.
///
/// The strict bound matters in the tails of a packet: splits that shave off a
/// branch of weight `~1e-12` have `dF -> 0+`, and a tolerance there would let
/// every state split at the weight cut-off.
pub fn optimize_split<R: Rng + ?Sized>(
    psi: &WaveFunction,
    params: &ModelParams,
    cfg: &OptimizerConfig,
    rng: &mut R,
) -> SplitOutcome {
    let ctx = ScanContext::new(psi, params, cfg.entropy == EntropyForm::Overlap);
    let grid = psi.grid();
    let pairs: Vec<(f64, f64)> = match cfg.mode {
        ScanMode::X0 { lambda } => candidate_x0s(grid, &ctx.rho, lambda)
            .into_iter()
            .map(|x0| (x0, lambda))
            .collect(),
        ScanMode::Lambda { x0 } => lambda_scan(grid, params)
            .into_iter()
            .map(|l| (x0, l))
            .collect(),
        ScanMode::Both => lambda_scan(grid, params)
            .into_iter()
            .flat_map(|l| candidate_x0s(grid, &ctx.rho, l).into_iter().map(move |x0| (x0, l)))
            .collect(),
    };

    let scored: Vec<Scored> = cfg
        .exec
        .map(&pairs, |&(x0, l)| ctx.score(x0, l))
        .into_iter()
        .flatten()
        .collect();

    let tol = cfg.tol_f * params.t0;
    let best = scored.iter().map(|s| s.d_f).fold(f64::INFINITY, f64::min);
    if !(best <= 0.0) {
        return SplitOutcome::NoSplit;
    }
    let cut = (best + tol).min(0.0);
    let tied: Vec<&Scored> = scored.iter().filter(|s| s.d_f <= cut).collect();
    let pick = if tied.len() > 1 {
        tied[rng.random_range(0..tied.len())]
    } else {
        tied[0]
    };
    let pair = trial_pair(grid, pick.x0, pick.lambda).expect("candidate ramp was validated");
    match evaluate(psi, pair, params, ctx.overlap) {
        Ok(basis) => SplitOutcome::Split(basis),
        Err(_) => SplitOutcome::NoSplit,
    }
}
