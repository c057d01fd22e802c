//! Preset experiments and their on-disk artifacts.
//!
//! A run directory holds `density.csv` (header `t` followed by the grid
//! points, then one row `t, rho(x_0), ..., rho(x_{n-1})` per snapshot),
//! `events.json` (the collapse events), `meta.json` (the resolved config,
//! seed and crate version; feeding it back reproduces the run) and, for
//! ensembles and master-equation runs, `stats.json`.

mod initial;
mod io;
mod selftest;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use initial::{eigenstates, InitialState, EIGEN_MAX_POINTS};
pub use io::{
    read_density_csv, read_meta, run, run_ensemble_to_dir, run_master, write_density_csv, EnsembleReport,
    MasterReport, Meta, RunReport, SeedDigest, VERSION,
};
pub use selftest::{selftest, Check};

use crate::collapse::{Clock, EnsembleOptions, SplitPolicy, TrajectorySpec};
use crate::error::{invalid, Error, Result};
use crate::exec::Exec;
use crate::localization::{
    EntropyForm, OptimizerConfig, ScanMode, LAMBDA_PRESET_DOUBLE_WELL, LAMBDA_PRESET_OPEN,
};
use crate::wave::{Grid1D, ModelParams, Potential, WaveFunction};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioId {
    Free,
    Tunnel,
    DoubleWell,
    Decay,
    WallInsertion,
    Custom,
}

impl ScenarioId {
    pub const PRESETS: [ScenarioId; 5] = [
        ScenarioId::Free,
        ScenarioId::Tunnel,
        ScenarioId::DoubleWell,
        ScenarioId::Decay,
        ScenarioId::WallInsertion,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioId::Free => "free",
            ScenarioId::Tunnel => "tunnel",
            ScenarioId::DoubleWell => "double_well",
            ScenarioId::Decay => "decay",
            ScenarioId::WallInsertion => "wall_insertion",
            ScenarioId::Custom => "custom",
        }
    }
}

impl fmt::Display for ScenarioId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let id = match s {
            "free" => ScenarioId::Free,
            "tunnel" => ScenarioId::Tunnel,
            "double_well" => ScenarioId::DoubleWell,
            "decay" => ScenarioId::Decay,
            "wall_insertion" => ScenarioId::WallInsertion,
            "custom" => ScenarioId::Custom,
            other => return Err(Error::UnknownScenario(other.to_string())),
        };
        Ok(id)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollapseConfig {
    pub clock: Clock,
    #[serde(flatten)]
    pub scan: ScanMode,
    #[serde(default)]
    pub entropy: EntropyForm,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub id: ScenarioId,
    pub grid: Grid1D,
    pub initial: InitialState,
    pub potential: Potential,
    pub params: ModelParams,
    pub collapse: CollapseConfig,
    pub dt: f64,
    pub t_end: f64,
    pub snapshot_every: usize,
    pub seed: u64,
    /// Boundary between the "left" and "right" regions for ensemble
    /// statistics.
    pub divide_at: f64,
}

/// Full-scale configuration of a preset experiment.
pub fn preset(id: &str) -> Result<ScenarioConfig> {
    let id: ScenarioId = id.parse()?;
    let poisson = |scan| CollapseConfig {
        clock: Clock::Poisson,
        scan,
        entropy: EntropyForm::Overlap,
    };
    let cfg = match id {
        ScenarioId::Free => {
            let params = ModelParams::new(1.0, 0.5, 1.0, 1.0)?;
            let l0 = params.lambda0();
            ScenarioConfig {
                id,
                grid: Grid1D::new(-16.0, 16.0, 1024)?,
                initial: InitialState::Gaussian {
                    x_c: 0.0,
                    delta: l0 / 3.0,
                    p0: 0.0,
                },
                potential: Potential::Free,
                params,
                collapse: poisson(ScanMode::X0 {
                    lambda: l0 * LAMBDA_PRESET_OPEN,
                }),
                dt: 0.01,
                t_end: 20.0,
                snapshot_every: 10,
                seed: 1,
                divide_at: 0.0,
            }
        }
        ScenarioId::Tunnel => {
            let params = ModelParams::new(1.0, 1.0, 1.0, 1.0)?;
            let l0 = params.lambda0();
            ScenarioConfig {
                id,
                grid: Grid1D::new(-16.0, 16.0, 1024)?,
                initial: InitialState::Gaussian {
                    x_c: -8.0,
                    delta: l0 / 2.0,
                    p0: 8.0,
                },
                potential: Potential::GaussianBarrier { amplitude: 0.08, a: 4.0 },
                params,
                collapse: poisson(ScanMode::X0 {
                    lambda: l0 * LAMBDA_PRESET_OPEN,
                }),
                dt: 0.001,
                t_end: 2.0,
                snapshot_every: 10,
                seed: 1,
                divide_at: 0.0,
            }
        }
        ScenarioId::DoubleWell => {
            let params = ModelParams::new(1.0, 2.0, 1.0, 1.0)?;
            ScenarioConfig {
                id,
                grid: Grid1D::new(-1.0, 1.0, 257)?,
                initial: InitialState::LeftPair,
                potential: Potential::DoubleWell {
                    bump_width: 0.1,
                    bump_height: 0.1,
                },
                params,
                collapse: poisson(ScanMode::X0 {
                    lambda: params.lambda0() * LAMBDA_PRESET_DOUBLE_WELL,
                }),
                dt: 0.001,
                t_end: 20.0,
                snapshot_every: 50,
                seed: 1,
                divide_at: 0.0,
            }
        }
        ScenarioId::Decay => {
            let params = ModelParams::new(1.0, 2.0, 1.0, 1.0)?;
            ScenarioConfig {
                id,
                grid: Grid1D::new(-1.0, 8.0, 1153)?,
                initial: InitialState::BoxGround { a: -1.0, b: 0.0 },
                potential: Potential::HalfOpenWell {
                    bump_width: 0.1,
                    bump_height: 0.1,
                },
                params,
                collapse: poisson(ScanMode::X0 {
                    lambda: params.lambda0() * LAMBDA_PRESET_DOUBLE_WELL,
                }),
                dt: 0.001,
                t_end: 10.0,
                snapshot_every: 50,
                seed: 1,
                divide_at: 0.0,
            }
        }
        ScenarioId::WallInsertion => {
            let params = ModelParams::new(1.0, 0.5, 1.0, 1.0)?;
            ScenarioConfig {
                id,
                grid: Grid1D::new(-1.0, 1.0, 129)?,
                initial: InitialState::Eigenstate { index: 0 },
                potential: Potential::GrowingBump {
                    bump_width: 0.1,
                    rate: 0.1,
                },
                params,
                collapse: poisson(ScanMode::Lambda { x0: 0.0 }),
                // The bump must reach ~4000 before tunnelling stops undoing
                // the collapses.
                dt: 0.01,
                t_end: 40_000.0,
                snapshot_every: 10_000,
                seed: 1,
                divide_at: 0.0,
            }
        }
        ScenarioId::Custom => {
            return Err(invalid("id", "`custom` has no preset; supply a config file"));
        }
    };
    Ok(cfg)
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(invalid("dt", format!("must be positive, got {}", self.dt)));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(invalid("t_end", format!("must be nonnegative, got {}", self.t_end)));
        }
        match self.collapse.scan {
            ScanMode::X0 { lambda } if !(lambda > 0.0) => {
                return Err(invalid("lambda", format!("must be positive, got {lambda}")))
            }
            ScanMode::Lambda { x0 } if !(self.grid.x_min() < x0 && x0 < self.grid.x_max()) => {
                return Err(invalid("x0", format!("{x0} lies outside the domain")))
            }
            _ => {}
        }
        Ok(())
    }

    pub fn initial_state(&self) -> Result<WaveFunction> {
        self.initial.build(&self.grid, &self.params, &self.potential)
    }

    pub fn optimizer(&self, exec: Exec) -> OptimizerConfig {
        OptimizerConfig::new(self.collapse.scan)
            .with_entropy(self.collapse.entropy)
            .with_exec(exec)
    }

    pub fn trajectory_spec(&self, exec: Exec) -> TrajectorySpec {
        TrajectorySpec {
            params: self.params,
            potential: self.potential.clone(),
            dt: self.dt,
            t_end: self.t_end,
            snapshot_every: self.snapshot_every,
            clock: self.collapse.clock,
            policy: SplitPolicy::Optimize(self.optimizer(exec)),
        }
    }

    pub fn ensemble_options(&self, exec: Exec) -> EnsembleOptions {
        EnsembleOptions {
            divide_at: self.divide_at,
            exec,
            ..EnsembleOptions::default()
        }
    }
}
