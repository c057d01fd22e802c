//! Schrödinger dynamics in one dimension interleaved with state-adaptive
//! spontaneous localization.
//!
//! Between collapse events the wave function evolves unitarily
//! ([`propagator`]). A Poisson clock triggers collapse attempts
//! ([`collapse`]); at each attempt the binary split minimizing the free
//! energy `dE - T0 dS` is searched ([`localization`]) and one branch is
//! sampled with its Born weight. [`densmat`] treats the ensemble-level
//! master equation on small grids and [`scenarios`] holds the preset
//! experiments and their on-disk artifacts.

pub mod error;
pub mod collapse;
pub mod densmat;
pub mod exec;
pub mod localization;
pub mod propagator;
pub mod scenarios;
pub mod wave;

pub use error::{Error, Result};
pub use exec::Exec;
