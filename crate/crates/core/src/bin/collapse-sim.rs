use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use adaptive_collapse::exec::{with_threads, Exec};
use adaptive_collapse::scenarios::{self, preset, read_meta, ScenarioConfig};
use adaptive_collapse::Error;

#[derive(Parser)]
#[command(name = "collapse-sim", version, about = "1D wave packets with free-energy-driven spontaneous collapse")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one trajectory and write density.csv, events.json, meta.json.
    Run(RunArgs),
    /// Run many seeds and write stats.json.
    Ensemble(EnsembleArgs),
    /// Density-matrix evolution with a frozen collapse kernel.
    Master(RunArgs),
    /// Quick invariant checks.
    Selftest,
}

#[derive(Args)]
struct Common {
    /// Preset id: free, tunnel, double_well, decay, wall_insertion.
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,
    /// Replay a meta.json written by an earlier run.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    gamma0: Option<f64>,
    #[arg(long = "t-end")]
    t_end: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Disable data parallelism.
    #[arg(long)]
    sequential: bool,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct EnsembleArgs {
    #[command(flatten)]
    common: Common,
    /// Number of seeds.
    #[arg(long)]
    seeds: u64,
    #[arg(long = "first-seed", default_value_t = 0)]
    first_seed: u64,
}

fn resolve(c: &Common) -> Result<ScenarioConfig, Error> {
    let mut cfg = match (&c.preset, &c.config) {
        (Some(id), _) => preset(id)?,
        (None, Some(path)) => read_meta(path)?.config,
        (None, None) => {
            return Err(Error::InvalidParameter {
                name: "preset",
                reason: "pass --preset <id> or --config <meta.json>".into(),
            })
        }
    };
    if let Some(g) = c.gamma0 {
        cfg.params.gamma0 = g;
    }
    if let Some(t) = c.t_end {
        cfg.t_end = t;
    }
    if let Some(dt) = c.dt {
        cfg.dt = dt;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn exec(c: &Common) -> Exec {
    if c.sequential {
        Exec::Sequential
    } else {
        Exec::Parallel
    }
}

fn print(v: &impl serde::Serialize) {
    println!("{}", serde_json::to_string_pretty(v).unwrap_or_default());
}

fn dispatch(cmd: Cmd) -> Result<bool, Error> {
    match cmd {
        Cmd::Run(a) => {
            let mut cfg = resolve(&a.common)?;
            if let Some(s) = a.seed {
                cfg.seed = s;
            }
            let ex = exec(&a.common);
            let rep = with_threads(a.common.threads, || scenarios::run(&cfg, &a.common.out, ex))?;
            print(&rep);
        }
        Cmd::Ensemble(a) => {
            let cfg = resolve(&a.common)?;
            let seeds: Vec<u64> = (a.first_seed..a.first_seed + a.seeds).collect();
            let ex = exec(&a.common);
            let rep = with_threads(a.common.threads, || {
                scenarios::run_ensemble_to_dir(&cfg, &seeds, &a.common.out, ex)
            })?;
            print(&json!({
                "trajectories": rep.stats.trajectories,
                "branch_counts": rep.stats.branch_counts,
                "final_left": rep.stats.final_left,
                "final_right": rep.stats.final_right,
                "final_both": rep.stats.final_both,
            }));
        }
        Cmd::Master(a) => {
            let mut cfg = resolve(&a.common)?;
            if let Some(s) = a.seed {
                cfg.seed = s;
            }
            let ex = exec(&a.common);
            let rep = with_threads(a.common.threads, || scenarios::run_master(&cfg, &a.common.out, ex))?;
            print(&json!({
                "n": rep.n,
                "x0": rep.x0,
                "lambda": rep.lambda,
                "final_trace": rep.trace.last(),
                "final_purity": rep.purity.last(),
            }));
        }
        Cmd::Selftest => {
            let checks = scenarios::selftest();
            print(&checks);
            return Ok(checks.iter().all(|c| c.passed));
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprintln!("{}", json!({ "error": "usage", "message": e.to_string().trim() }));
            return ExitCode::from(2);
        }
    };
    match dispatch(cli.cmd) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("{}", json!({ "error": e.kind(), "message": e.to_string() }));
            ExitCode::FAILURE
        }
    }
}
