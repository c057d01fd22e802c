//! The stochastic collapse engine.
//!
//! Every time step is either a collapse attempt or a unitary step. Under the
//! Poisson clock an attempt happens with probability `gamma0 dt`; the split is
//! then optimized (or taken from a frozen pair), one branch is drawn with its
//! weight `w_n`, and the state is replaced by `P_n psi / sqrt(w_n)`.
//!
//! Random numbers are consumed from one stream per trajectory in a fixed
//! order: clock draw (Poisson clock only), tie-break draw (only when several
//! optimal candidates tie), branch draw (only for an actual split). Replaying
//! a seed therefore replays the whole event sequence.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::exec::Exec;
use crate::localization::{
    evaluate, optimize_split, LocalizationPair, OptimizerConfig, Side, SplitBasis, SplitOutcome,
    MIN_BRANCH_WEIGHT,
};
use crate::propagator::Cayley;
use crate::wave::{observables, ModelParams, Observables, Potential, WaveFunction};

/// Random stream owned by a trajectory.
pub type Stream = ChaCha8Rng;

pub fn stream(seed: u64) -> Stream {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Largest `gamma0 dt` accepted by the Poisson clock.
pub const MAX_CLOCK_PROBABILITY: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Chosen {
    L,
    R,
    NoSplit,
}

impl From<Side> for Chosen {
    fn from(s: Side) -> Self {
        match s {
            Side::L => Chosen::L,
            Side::R => Chosen::R,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollapseEvent {
    pub t: f64,
    pub x0: Option<f64>,
    pub lambda: Option<f64>,
    #[serde(rename = "wL")]
    pub w_l: Option<f64>,
    #[serde(rename = "wR")]
    pub w_r: Option<f64>,
    pub chosen: Chosen,
    #[serde(rename = "dE")]
    pub d_e: f64,
    #[serde(rename = "dS")]
    pub d_s: f64,
    /// Word position of the stream when the event started.
    #[serde(skip)]
    pub seed_cursor: u128,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Clock {
    /// Never collapse.
    Off,
    /// Bernoulli(`gamma0 dt`) attempt per step.
    #[default]
    Poisson,
    /// Every step is a collapse attempt.
    Forced,
}

/// Where the split of an attempt comes from.
#[derive(Clone, Debug, PartialEq)]
pub enum SplitPolicy {
    /// Free-energy optimization on the current state.
    Optimize(OptimizerConfig),
    /// A frozen, state-independent pair. Used for measurement-like settings
    /// and for comparison with the master equation; no admissibility check.
    Fixed(LocalizationPair),
}

/// `P_side psi / sqrt(w_side)`, re-normalized.
pub fn apply_branch(psi: &WaveFunction, pair: &LocalizationPair, side: Side) -> Result<WaveFunction> {
    let p = pair.envelope(side);
    if p.len() != psi.grid().len() {
        return Err(invalid("pair", "envelope length does not match the grid"));
    }
    let g = psi.grid();
    let w = g.integrate_with(|i| p[i] * p[i] * psi.amp()[i].norm_sqr());
    if !(w >= MIN_BRANCH_WEIGHT) {
        return Err(Error::EmptyBranch(w));
    }
    let scale = 1.0 / w.sqrt();
    let env: Vec<f64> = p.iter().map(|v| v * scale).collect();
    psi.scaled_by(&env).normalized()
}

fn sample_side(basis: &SplitBasis, rng: &mut Stream) -> Side {
    let u: f64 = rng.random();
    let (wl, wr) = (basis.w_l, basis.w_r);
    if wl < MIN_BRANCH_WEIGHT {
        Side::R
    } else if wr < MIN_BRANCH_WEIGHT || u * (wl + wr) < wl {
        Side::L
    } else {
        Side::R
    }
}

/// One clock tick. Returns `None` when no attempt happens; otherwise `psi`
/// is replaced by the sampled branch (or left alone for `NoSplit`) and the
/// event is returned.
pub fn maybe_collapse(
    psi: &mut WaveFunction,
    params: &ModelParams,
    t: f64,
    dt: f64,
    clock: Clock,
    policy: &SplitPolicy,
    rng: &mut Stream,
) -> Result<Option<CollapseEvent>> {
    let cursor = rng.get_word_pos();
    match clock {
        Clock::Off => return Ok(None),
        Clock::Poisson => {
            let p = params.gamma0 * dt;
            if p > MAX_CLOCK_PROBABILITY {
                return Err(invalid(
                    "dt",
                    format!("gamma0 dt = {p} exceeds {MAX_CLOCK_PROBABILITY}"),
                ));
            }
            if p == 0.0 {
                return Ok(None);
            }
            let u: f64 = rng.random();
            if u >= p {
                return Ok(None);
            }
        }
        Clock::Forced => {}
    }

    let basis = match policy {
        SplitPolicy::Optimize(cfg) => match optimize_split(psi, params, cfg, rng) {
            SplitOutcome::Split(b) => b,
            SplitOutcome::NoSplit => {
                return Ok(Some(CollapseEvent {
                    t,
                    x0: None,
                    lambda: None,
                    w_l: None,
                    w_r: None,
                    chosen: Chosen::NoSplit,
                    d_e: 0.0,
                    d_s: 0.0,
                    seed_cursor: cursor,
                }))
            }
        },
        SplitPolicy::Fixed(pair) => evaluate(psi, pair.clone(), params, true)?,
    };
    let side = sample_side(&basis, rng);
    *psi = apply_branch(psi, &basis.pair, side)?;
    let finite = |v: f64| v.is_finite().then_some(v);
    Ok(Some(CollapseEvent {
        t,
        x0: finite(basis.x0()),
        lambda: finite(basis.lambda()),
        w_l: Some(basis.w_l),
        w_r: Some(basis.w_r),
        chosen: side.into(),
        d_e: basis.d_e,
        d_s: basis.d_s,
        seed_cursor: cursor,
    }))
}

/// Everything needed to run one trajectory from a given initial state.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectorySpec {
    pub params: ModelParams,
    pub potential: Potential,
    pub dt: f64,
    pub t_end: f64,
    /// Steps between snapshots; 0 keeps only the first and last.
    pub snapshot_every: usize,
    pub clock: Clock,
    pub policy: SplitPolicy,
}

impl TrajectorySpec {
    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }

    fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(invalid("dt", format!("must be positive, got {}", self.dt)));
        }
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return Err(invalid("t_end", format!("must be nonnegative, got {}", self.t_end)));
        }
        if self.clock == Clock::Poisson && self.params.gamma0 * self.dt > MAX_CLOCK_PROBABILITY {
            return Err(invalid(
                "dt",
                format!(
                    "gamma0 dt = {} exceeds {MAX_CLOCK_PROBABILITY}",
                    self.params.gamma0 * self.dt
                ),
            ));
        }
        Ok(())
    }
}

/// Drive one trajectory, calling `observer(t, psi)` at snapshot times.
pub fn run_trajectory_with(
    psi0: &WaveFunction,
    spec: &TrajectorySpec,
    seed: u64,
    mut observer: impl FnMut(f64, &WaveFunction),
) -> Result<(WaveFunction, Vec<CollapseEvent>)> {
    spec.validate()?;
    let mut rng = stream(seed);
    let mut stepper = Cayley::new(psi0.grid(), &spec.params);
    let mut psi = psi0.clone();
    let mut events = Vec::new();
    let steps = spec.steps();
    observer(0.0, &psi);
    for k in 0..steps {
        let t = k as f64 * spec.dt;
        match maybe_collapse(&mut psi, &spec.params, t, spec.dt, spec.clock, &spec.policy, &mut rng)? {
            Some(ev) => events.push(ev),
            None => stepper.step(&mut psi, &spec.potential, t, spec.dt)?,
        }
        let n = k + 1;
        if n == steps || (spec.snapshot_every > 0 && n % spec.snapshot_every == 0) {
            observer(n as f64 * spec.dt, &psi);
        }
    }
    Ok((psi, events))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub t: f64,
    pub rho: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryRecord {
    pub params: ModelParams,
    pub seed: u64,
    pub snapshots: Vec<Snapshot>,
    pub events: Vec<CollapseEvent>,
    pub final_state: WaveFunction,
    pub final_observables: Observables,
}

pub fn run_trajectory(psi0: &WaveFunction, spec: &TrajectorySpec, seed: u64) -> Result<TrajectoryRecord> {
    let mut snapshots = Vec::new();
    let (psi, events) = run_trajectory_with(psi0, spec, seed, |t, p| {
        snapshots.push(Snapshot { t, rho: p.density() })
    })?;
    let t_end = spec.steps() as f64 * spec.dt;
    Ok(TrajectoryRecord {
        params: spec.params,
        seed,
        snapshots,
        events,
        final_observables: observables(&psi, &spec.params, &spec.potential, t_end),
        final_state: psi,
    })
}

/// Fraction of the density at `x < divide`.
pub fn left_occupation(psi: &WaveFunction, divide: f64) -> f64 {
    let g = psi.grid();
    let a = psi.amp();
    let left = g.integrate_with(|i| if g.x(i) < divide { a[i].norm_sqr() } else { 0.0 });
    left / psi.norm_sqr()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FinalSide {
    Left,
    Right,
    Both,
}

/// Per-seed digest kept by ensembles instead of full density snapshots.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySummary {
    pub seed: u64,
    pub events: Vec<CollapseEvent>,
    pub times: Vec<f64>,
    pub left_occupation: Vec<f64>,
    pub first_event: Option<f64>,
    pub final_left: f64,
    pub final_side: FinalSide,
    pub final_observables: Observables,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleOptions {
    /// Boundary between the "left" and "right" regions.
    pub divide_at: f64,
    /// A final state counts as confined to one side when the other side
    /// holds less than this fraction.
    pub confinement: f64,
    #[serde(skip)]
    pub exec: Exec,
}

impl Default for EnsembleOptions {
    fn default() -> Self {
        EnsembleOptions {
            divide_at: 0.0,
            confinement: 0.01,
            exec: Exec::default(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BranchCounts {
    pub l: usize,
    pub r: usize,
    pub no_split: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStats {
    pub trajectories: usize,
    pub branch_counts: BranchCounts,
    /// Count of first events (L, R, NoSplit) across trajectories.
    pub first_branch_counts: BranchCounts,
    pub final_left: usize,
    pub final_right: usize,
    pub final_both: usize,
    pub times: Vec<f64>,
    /// Fraction of trajectories without any event up to each time.
    pub survival: Vec<f64>,
    /// Mean left occupation at each time.
    pub mean_left_occupation: Vec<f64>,
    /// Histogram of left occupation over all sampled times, ten bins on [0, 1].
    pub occupation_histogram: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Ensemble {
    pub summaries: Vec<TrajectorySummary>,
    pub stats: EnsembleStats,
}

pub fn summarize(
    psi0: &WaveFunction,
    spec: &TrajectorySpec,
    seed: u64,
    opts: &EnsembleOptions,
) -> Result<TrajectorySummary> {
    let mut times = Vec::new();
    let mut occ = Vec::new();
    let (psi, events) = run_trajectory_with(psi0, spec, seed, |t, p| {
        times.push(t);
        occ.push(left_occupation(p, opts.divide_at));
    })?;
    let final_left = left_occupation(&psi, opts.divide_at);
    let final_side = if 1.0 - final_left < opts.confinement {
        FinalSide::Left
    } else if final_left < opts.confinement {
        FinalSide::Right
    } else {
        FinalSide::Both
    };
    let t_end = spec.steps() as f64 * spec.dt;
    Ok(TrajectorySummary {
        seed,
        first_event: events.first().map(|e| e.t),
        events,
        times,
        left_occupation: occ,
        final_left,
        final_side,
        final_observables: observables(&psi, &spec.params, &spec.potential, t_end),
    })
}

fn count(counts: &mut BranchCounts, c: Chosen) {
    match c {
        Chosen::L => counts.l += 1,
        Chosen::R => counts.r += 1,
        Chosen::NoSplit => counts.no_split += 1,
    }
}

/// Run one trajectory per seed and aggregate. Per-seed results come back in
/// seed order whatever the execution strategy.
pub fn run_ensemble(
    psi0: &WaveFunction,
    spec: &TrajectorySpec,
    seeds: &[u64],
    opts: &EnsembleOptions,
) -> Result<Ensemble> {
    if seeds.len() < 2 {
        return Err(invalid("seeds", "an ensemble needs at least two seeds"));
    }
    let summaries = opts
        .exec
        .map(seeds, |&s| summarize(psi0, spec, s, opts))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

    let times = summaries[0].times.clone();
    let mut branch_counts = BranchCounts::default();
    let mut first_branch_counts = BranchCounts::default();
    let (mut fl, mut fr, mut fb) = (0, 0, 0);
    let mut survival = vec![0.0; times.len()];
    let mut mean_occ = vec![0.0; times.len()];
    let mut hist = vec![0usize; 10];
    for s in &summaries {
        for e in &s.events {
            count(&mut branch_counts, e.chosen);
        }
        if let Some(e) = s.events.first() {
            count(&mut first_branch_counts, e.chosen);
        }
        match s.final_side {
            FinalSide::Left => fl += 1,
            FinalSide::Right => fr += 1,
            FinalSide::Both => fb += 1,
        }
        for (k, (&t, &o)) in s.times.iter().zip(&s.left_occupation).enumerate() {
            // an event stamped t_e fills the step ending at t_e + dt
            if s.first_event.is_none_or(|te| te >= t) {
                survival[k] += 1.0;
            }
            mean_occ[k] += o;
            hist[((o * 10.0) as usize).min(9)] += 1;
        }
    }
    let n = summaries.len() as f64;
    survival.iter_mut().for_each(|v| *v /= n);
    mean_occ.iter_mut().for_each(|v| *v /= n);
    let stats = EnsembleStats {
        trajectories: summaries.len(),
        branch_counts,
        first_branch_counts,
        final_left: fl,
        final_right: fr,
        final_both: fb,
        times,
        survival,
        mean_left_occupation: mean_occ,
        occupation_histogram: hist,
    };
    Ok(Ensemble { summaries, stats })
}
