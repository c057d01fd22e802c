//! Grid, wave-function storage, potentials and the observables consumed by
//! every other module.

mod grid;
pub(crate) mod observables;
mod params;
mod potential;
mod state;

pub use grid::Grid1D;
pub use observables::{ensemble_spread, observables, s_prime, Observables, Spread};
pub use params::ModelParams;
pub use potential::Potential;
pub use state::{gaussian_packet, WaveFunction};

pub use num_complex::Complex64 as C64;
