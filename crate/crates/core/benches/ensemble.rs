use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use adaptive_collapse::collapse::{run_ensemble, stream, Clock, EnsembleOptions, SplitPolicy, TrajectorySpec};
use adaptive_collapse::localization::{optimize_split, OptimizerConfig, ScanMode};
use adaptive_collapse::scenarios::InitialState;
use adaptive_collapse::wave::{Grid1D, ModelParams, Potential};
use adaptive_collapse::Exec;

const STRATEGIES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn optimizer(c: &mut Criterion) {
    let g = Grid1D::new(-16.0, 16.0, 1024).unwrap();
    let p = ModelParams::natural(0.5);
    let psi = InitialState::TwoLobes {
        r: 6.0,
        delta: 1.0,
        c_plus_sq: 0.64,
    }
    .build(&g, &p, &Potential::Free)
    .unwrap();
    let mut group = c.benchmark_group("optimize_split");
    for (name, exec) in STRATEGIES {
        let cfg = OptimizerConfig::new(ScanMode::Both).with_exec(exec);
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            let mut rng = stream(1);
            b.iter(|| optimize_split(&psi, &p, &cfg, &mut rng))
        });
    }
    group.finish();
}

fn ensemble(c: &mut Criterion) {
    let g = Grid1D::new(-16.0, 16.0, 256).unwrap();
    let p = ModelParams::natural(0.5).with_gamma0(3.0);
    let psi = InitialState::Gaussian {
        x_c: 0.0,
        delta: 3.0,
        p0: 0.0,
    }
    .build(&g, &p, &Potential::Free)
    .unwrap();
    let spec = TrajectorySpec {
        params: p,
        potential: Potential::Free,
        dt: 0.01,
        t_end: 1.0,
        snapshot_every: 10,
        clock: Clock::Poisson,
        policy: SplitPolicy::Optimize(OptimizerConfig::new(ScanMode::X0 {
            lambda: p.lambda0() / 8.0,
        })
        .with_exec(Exec::Sequential)),
    };
    let seeds: Vec<u64> = (0..16).collect();
    let mut group = c.benchmark_group("run_ensemble");
    group.sample_size(10);
    for (name, exec) in STRATEGIES {
        let opts = EnsembleOptions {
            exec,
            ..EnsembleOptions::default()
        };
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| run_ensemble(&psi, &spec, &seeds, &opts).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, optimizer, ensemble);
criterion_main!(benches);
