use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid range: x_min = {x_min} must be below x_max = {x_max}")]
    InvalidRange { x_min: f64, x_max: f64 },
    #[error("grid needs at least 16 points, got {0}")]
    TooFewPoints(usize),
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("packet clipped by boundary: edge amplitude ratio {ratio:e} exceeds 1e-10")]
    PacketClipped { ratio: f64 },
    #[error("ramp half-width {lambda} is under-resolved on a grid with dx = {dx}")]
    RampUnderresolved { lambda: f64, dx: f64 },
    #[error("ramp [{lo}, {hi}] leaves the domain")]
    RampOutsideDomain { lo: f64, hi: f64 },
    #[error("branch weights sum to {0}, expected 1")]
    WeightMismatch(f64),
    #[error("branch weight {0:e} is too small to project onto")]
    EmptyBranch(f64),
    #[error("tridiagonal solve failed: zero pivot at row {0}")]
    LinearSolve(usize),
    #[error("no root of the free-energy constraint in [{lo}, {hi}]")]
    NoRootInBracket { lo: f64, hi: f64 },
    #[error("solver did not converge: {0}")]
    NonConvergence(String),
    #[error("grid too large for this operation: {n} > {max}")]
    GridTooLarge { n: usize, max: usize },
    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),
    #[error("malformed input in {path}: {reason}")]
    Malformed { path: PathBuf, reason: String },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("json error on {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    /// Short machine-readable tag used by the CLI error report.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidRange { .. } => "invalid-range",
            Error::TooFewPoints(_) => "too-few-points",
            Error::InvalidParameter { .. } => "invalid-parameter",
            Error::PacketClipped { .. } => "packet-clipped-by-boundary",
            Error::RampUnderresolved { .. } => "ramp-underresolved",
            Error::RampOutsideDomain { .. } => "ramp-outside-domain",
            Error::WeightMismatch(_) => "weight-mismatch",
            Error::EmptyBranch(_) => "empty-branch",
            Error::LinearSolve(_) => "linear-solve-failure",
            Error::NoRootInBracket { .. } => "no-root-in-bracket",
            Error::NonConvergence(_) => "solver-nonconvergence",
            Error::GridTooLarge { .. } => "grid-too-large",
            Error::UnknownScenario(_) => "unknown-id",
            Error::Malformed { .. } => "malformed-input",
            Error::Io { .. } => "io",
            Error::Json { .. } => "json",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
