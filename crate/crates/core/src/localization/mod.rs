//! State-dependent localization functions.
//!
//! A binary split of the state is described by a pair of real envelopes
//! `(P_L, P_R)` with `P_L^2 + P_R^2 = 1`. This module builds the cosine-ramp
//! trial pair and scores it (branch weights, energy cost, entropy gain,
//! overlap), searches for the free-energy-optimal split, and provides the
//! variational pendulum profiles together with the centring and width
//! conditions that fix them.

mod optimize;
mod pendulum;
mod product;
mod trial;

pub use optimize::{
    candidate_x0s, lambda_scan, optimize_split, EntropyForm, OptimizerConfig, ScanMode,
    SplitOutcome, LAMBDA_PRESET_DOUBLE_WELL, LAMBDA_PRESET_FINE, LAMBDA_PRESET_OPEN,
};
pub use pendulum::{
    center_condition, lambda_from_constraint, pendulum_analytic, pendulum_entropy,
    pendulum_entropy_slope, EntropyTarget, EntropyThetaField, LambdaSolution, ThetaField,
};
pub use product::{s_prime_product_factorization, ProductSPrime};
pub use trial::{
    energy_cost, entropy_gain, evaluate, overlap_p, trial_pair, weights, EnergyCost,
    LocalizationPair, PairKind, Side, SplitBasis, MIN_BRANCH_WEIGHT,
};
