use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::ScenarioConfig;
use crate::collapse::{run_ensemble, run_trajectory, stream, EnsembleStats, FinalSide, Snapshot};
use crate::densmat::{delta_kernel, evolve_master_between, DeltaKernel, DensityMatrixGrid, Hamiltonian, DENSMAT_MAX_POINTS};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::localization::{optimize_split, SplitOutcome};
use crate::wave::{Grid1D, Observables};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub config: ScenarioConfig,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seeds: Option<Vec<u64>>,
    pub version: String,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let s = serde_json::to_string_pretty(value).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })?;
    fs::write(path, s + "\n").map_err(io_err(path))
}

pub fn read_meta(path: &Path) -> Result<Meta> {
    let s = fs::read_to_string(path).map_err(io_err(path))?;
    let meta: Meta = serde_json::from_str(&s).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })?;
    meta.config.validate()?;
    Ok(meta)
}

/// Header `t,x_0,...`, then `t,rho_0,...` per snapshot, 9 significant digits.
pub fn write_density_csv(path: &Path, grid: &Grid1D, snapshots: &[Snapshot]) -> Result<()> {
    let mut s = String::from("t");
    for x in grid.xs() {
        let _ = write!(s, ",{x:.8e}");
    }
    s.push('\n');
    for snap in snapshots {
        let _ = write!(s, "{:.8e}", snap.t);
        for r in &snap.rho {
            let _ = write!(s, ",{r:.8e}");
        }
        s.push('\n');
    }
    fs::write(path, s).map_err(io_err(path))
}

/// Parse a density CSV back into grid points and snapshots.
pub fn read_density_csv(path: &Path) -> Result<(Vec<f64>, Vec<Snapshot>)> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let bad = |line: usize, reason: String| Error::Malformed {
        path: path.to_path_buf(),
        reason: format!("line {line}: {reason}"),
    };
    let parse_row = |line: usize, row: &str| -> Result<Vec<f64>> {
        row.split(',')
            .map(|c| c.trim().parse::<f64>().map_err(|e| bad(line, format!("`{c}`: {e}"))))
            .collect()
    };
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| bad(1, "empty file".into()))?;
    let mut cells = header.split(',');
    if cells.next() != Some("t") {
        return Err(bad(1, "header must start with `t`".into()));
    }
    let xs = parse_row(1, &cells.collect::<Vec<_>>().join(","))?;
    let mut snaps = Vec::new();
    for (k, row) in lines {
        if row.is_empty() {
            continue;
        }
        let vals = parse_row(k + 1, row)?;
        if vals.len() != xs.len() + 1 {
            return Err(bad(k + 1, format!("expected {} columns, found {}", xs.len() + 1, vals.len())));
        }
        snaps.push(Snapshot {
            t: vals[0],
            rho: vals[1..].to_vec(),
        });
    }
    Ok((xs, snaps))
}

fn prepare(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(io_err(dir))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunReport {
    pub dir: PathBuf,
    pub events: usize,
    pub snapshots: usize,
    pub final_observables: Observables,
}

/// Single trajectory: writes `density.csv`, `events.json`, `meta.json`.
pub fn run(cfg: &ScenarioConfig, dir: &Path, exec: Exec) -> Result<RunReport> {
    cfg.validate()?;
    prepare(dir)?;
    let psi0 = cfg.initial_state()?;
    let rec = run_trajectory(&psi0, &cfg.trajectory_spec(exec), cfg.seed)?;
    write_density_csv(&dir.join("density.csv"), &cfg.grid, &rec.snapshots)?;
    write_json(&dir.join("events.json"), &rec.events)?;
    write_json(
        &dir.join("meta.json"),
        &Meta {
            config: cfg.clone(),
            seed: cfg.seed,
            seeds: None,
            version: VERSION.to_string(),
        },
    )?;
    Ok(RunReport {
        dir: dir.to_path_buf(),
        events: rec.events.len(),
        snapshots: rec.snapshots.len(),
        final_observables: rec.final_observables,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedDigest {
    pub seed: u64,
    pub events: usize,
    pub splits: usize,
    pub first_event: Option<f64>,
    pub final_side: FinalSide,
    pub final_left: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleReport {
    pub stats: EnsembleStats,
    pub trajectories: Vec<SeedDigest>,
}

/// Ensemble over `seeds`: writes `stats.json` and `meta.json`.
pub fn run_ensemble_to_dir(cfg: &ScenarioConfig, seeds: &[u64], dir: &Path, exec: Exec) -> Result<EnsembleReport> {
    cfg.validate()?;
    prepare(dir)?;
    let psi0 = cfg.initial_state()?;
    // Trajectories fan out; each optimizer runs sequentially inside its own.
    let ens = run_ensemble(&psi0, &cfg.trajectory_spec(Exec::Sequential), seeds, &cfg.ensemble_options(exec))?;
    let report = EnsembleReport {
        trajectories: ens
            .summaries
            .iter()
            .map(|s| SeedDigest {
                seed: s.seed,
                events: s.events.len(),
                splits: s.events.iter().filter(|e| e.chosen != crate::collapse::Chosen::NoSplit).count(),
                first_event: s.first_event,
                final_side: s.final_side,
                final_left: s.final_left,
            })
            .collect(),
        stats: ens.stats,
    };
    write_json(&dir.join("stats.json"), &report)?;
    write_json(
        &dir.join("meta.json"),
        &Meta {
            config: cfg.clone(),
            seed: seeds[0],
            seeds: Some(seeds.to_vec()),
            version: VERSION.to_string(),
        },
    )?;
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MasterReport {
    pub n: usize,
    /// Split frozen into the kernel, if the initial state admits one.
    pub x0: Option<f64>,
    pub lambda: Option<f64>,
    pub times: Vec<f64>,
    pub trace: Vec<f64>,
    pub purity: Vec<f64>,
}

/// Density-matrix run. The grid is coarsened to the density-matrix limit if
/// needed, the split optimal for the initial state is frozen into the
/// kernel, and `density.csv` holds the diagonal.
pub fn run_master(cfg: &ScenarioConfig, dir: &Path, exec: Exec) -> Result<MasterReport> {
    cfg.validate()?;
    prepare(dir)?;
    let mut cfg = cfg.clone();
    if cfg.grid.len() > DENSMAT_MAX_POINTS {
        cfg.grid = Grid1D::new(cfg.grid.x_min(), cfg.grid.x_max(), DENSMAT_MAX_POINTS)?;
    }
    let psi0 = cfg.initial_state()?;
    let mut rng = stream(cfg.seed);
    let (kernel, x0, lambda) = match optimize_split(&psi0, &cfg.params, &cfg.optimizer(exec), &mut rng) {
        SplitOutcome::Split(b) => (delta_kernel(&b.pair)?, Some(b.x0()), Some(b.lambda())),
        SplitOutcome::NoSplit => (DeltaKernel::identity(cfg.grid.len()), None, None),
    };
    let h = Hamiltonian::Schrodinger(cfg.potential.clone());
    let mut rho = DensityMatrixGrid::pure(&psi0)?;
    let steps = (cfg.t_end / cfg.dt).round() as usize;
    let stride = cfg.snapshot_every.max(1);
    let mut report = MasterReport {
        n: cfg.grid.len(),
        x0,
        lambda,
        times: vec![0.0],
        trace: vec![rho.trace()],
        purity: vec![rho.purity()],
    };
    let mut snaps = vec![Snapshot {
        t: 0.0,
        rho: rho.diagonal(),
    }];
    let mut k = 0;
    while k < steps {
        let next = (k + stride).min(steps);
        rho = evolve_master_between(&rho, &h, &kernel, &cfg.params, cfg.dt, k, next)?;
        k = next;
        let t = k as f64 * cfg.dt;
        report.times.push(t);
        report.trace.push(rho.trace());
        report.purity.push(rho.purity());
        snaps.push(Snapshot { t, rho: rho.diagonal() });
    }
    write_density_csv(&dir.join("density.csv"), &cfg.grid, &snaps)?;
    write_json(&dir.join("stats.json"), &report)?;
    write_json(
        &dir.join("meta.json"),
        &Meta {
            config: cfg.clone(),
            seed: cfg.seed,
            seeds: None,
            version: VERSION.to_string(),
        },
    )?;
    Ok(report)
}
