//! Matter-wave propagation through slit apertures with the exact free-particle
//! kernel, and the detector-plane densities that follow from three readings of
//! the wavefunction: plain Born, blocked-wave and median-truncated.

pub mod aperture;
pub mod config;
pub mod density;
pub mod error;
pub mod experiment;
pub mod oscillatory;
pub mod output;
pub mod physics;
pub mod propagator;

pub use error::{Error, Result};
