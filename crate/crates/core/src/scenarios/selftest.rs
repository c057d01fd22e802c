use rand::Rng;
use serde::Serialize;

use crate::collapse::{maybe_collapse, run_trajectory, stream, Chosen, Clock, SplitPolicy, TrajectorySpec};
use crate::densmat::{delta_kernel, evolve_master, DensityMatrixGrid, Hamiltonian};
use crate::localization::{evaluate, trial_pair, OptimizerConfig, ScanMode, Side};
use crate::propagator::Cayley;
use crate::wave::{gaussian_packet, observables, Grid1D, ModelParams, Potential, WaveFunction, C64};

use super::InitialState;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, passed: bool, detail: String) -> Check {
    Check { name, passed, detail }
}

/// Fast invariant checks run by `collapse-sim selftest`.
pub fn selftest() -> Vec<Check> {
    vec![unitarity(), split_bookkeeping(), born(), master_decay(), determinism()]
}

fn unitarity() -> Check {
    let g = Grid1D::new(-16.0, 16.0, 512).expect("grid");
    let p = ModelParams::natural(0.5);
    let mut psi = gaussian_packet(&g, 0.0, 1.2, 1.0).expect("packet");
    let e0 = observables(&psi, &p, &Potential::Free, 0.0).energy;
    let mut st = Cayley::new(&g, &p);
    let mut ok = true;
    for k in 0..1000 {
        ok &= st.step(&mut psi, &Potential::Free, k as f64 * 0.01, 0.01).is_ok();
    }
    let norm = (psi.norm_sqr() - 1.0).abs();
    let drift = (observables(&psi, &p, &Potential::Free, 10.0).energy - e0).abs() / e0;
    check(
        "unitarity",
        ok && norm < 1e-10 && drift < 1e-8,
        format!("norm drift {norm:e}, energy drift {drift:e}"),
    )
}

fn split_bookkeeping() -> Check {
    let g = Grid1D::new(-10.0, 10.0, 801).expect("grid");
    let p = ModelParams::natural(1.0);
    let mut rng = stream(17);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let c: Vec<(f64, f64, f64)> = (0..3)
            .map(|_| (rng.random_range(-4.0..4.0), rng.random_range(0.6..1.5), rng.random_range(0.1..1.0)))
            .collect();
        let psi = WaveFunction::from_fn(g.clone(), |x| {
            C64::new(c.iter().map(|&(m, s, a)| a * (-((x - m) / s).powi(2)).exp()).sum(), 0.0)
        })
        .and_then(|w| w.normalized())
        .expect("state");
        let pair = trial_pair(&g, rng.random_range(-3.0..3.0), rng.random_range(0.2..1.5)).expect("pair");
        let b = evaluate(&psi, pair, &p, true).expect("split");
        let e = |w: &WaveFunction| observables(w, &p, &Potential::Free, 0.0).energy;
        let mut after = 0.0;
        for (side, w) in [(Side::L, b.w_l), (Side::R, b.w_r)] {
            if w > 1e-12 {
                after += w * e(&crate::collapse::apply_branch(&psi, &b.pair, side).expect("branch"));
            }
        }
        let direct = after - e(&psi);
        worst = worst.max((direct - b.d_e).abs() / b.d_e.max(1e-300));
    }
    check("energy-bookkeeping", worst < 1e-6, format!("max relative error {worst:e}"))
}

fn born() -> Check {
    let g = Grid1D::new(-16.0, 16.0, 512).expect("grid");
    let p = ModelParams::natural(0.5);
    let psi = InitialState::TwoLobes {
        r: 6.0,
        delta: 1.0,
        c_plus_sq: 0.64,
    }
    .build(&g, &p, &Potential::Free)
    .expect("state");
    let pol = SplitPolicy::Optimize(OptimizerConfig::new(ScanMode::X0 {
        lambda: p.lambda0() / 8.0,
    }));
    let draws = 400;
    let mut right = 0;
    let mut rng = stream(5);
    for _ in 0..draws {
        let mut s = psi.clone();
        if let Ok(Some(ev)) = maybe_collapse(&mut s, &p, 0.0, 0.01, Clock::Forced, &pol, &mut rng) {
            right += usize::from(ev.chosen == Chosen::R);
        }
    }
    let f = right as f64 / draws as f64;
    let sigma = (0.64 * 0.36 / draws as f64).sqrt();
    check("born-rule", (f - 0.64).abs() < 3.0 * sigma, format!("right fraction {f} (3 sigma = {:.3})", 3.0 * sigma))
}

fn master_decay() -> Check {
    let g = Grid1D::new(-6.0, 6.0, 64).expect("grid");
    let p = ModelParams::natural(1.0);
    let psi = gaussian_packet(&g, 0.0, 1.0, 0.5).expect("packet");
    let rho = DensityMatrixGrid::pure(&psi).expect("rho");
    let k = delta_kernel(&trial_pair(&g, 0.2, 0.4).expect("pair")).expect("kernel");
    let out = evolve_master(&rho, &Hamiltonian::Zero, &k, &p, 0.01, 1.0).expect("evolve");
    let mut err: f64 = 0.0;
    for i in 0..g.len() {
        for j in 0..g.len() {
            let exact = rho.get(i, j) * (-(1.0 - k.get(i, j))).exp();
            err = err.max((out.get(i, j) - exact).norm());
        }
    }
    check("master-closed-form", err < 1e-8, format!("max deviation {err:e}"))
}

fn determinism() -> Check {
    let g = Grid1D::new(-16.0, 16.0, 256).expect("grid");
    let p = ModelParams::natural(0.5).with_gamma0(3.0);
    let psi = gaussian_packet(&g, 0.0, 3.0, 0.0).expect("packet");
    let spec = TrajectorySpec {
        params: p,
        potential: Potential::Free,
        dt: 0.01,
        t_end: 2.0,
        snapshot_every: 0,
        clock: Clock::Poisson,
        policy: SplitPolicy::Optimize(OptimizerConfig::new(ScanMode::X0 {
            lambda: p.lambda0() / 8.0,
        })),
    };
    let a = run_trajectory(&psi, &spec, 3).map(|r| r.events);
    let b = run_trajectory(&psi, &spec, 3).map(|r| r.events);
    let same = matches!((&a, &b), (Ok(x), Ok(y)) if x == y);
    check("determinism", same, format!("{} events", a.map(|e| e.len()).unwrap_or(0)))
}
