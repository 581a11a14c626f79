//! Simulation and analysis toolkit for arrayed-waveguide-grating (AWG) sources
//! of path-entangled photon pairs.
//!
//! The crate is layered bottom-up:
//!
//! * [`awg`] designs the demultiplexer: channel spacing, spatial dispersion,
//!   input/output port planning and parametric passband spectra.
//! * [`pair_source`] turns a pair of passbands into a joint spectral amplitude
//!   for four-wave-mixing photon pairs.
//! * [`state`] builds the path-entangled two-photon state and evaluates
//!   coincidence probabilities and spectral-overlap visibilities.
//! * [`sim`] runs a Monte Carlo of the gated coincidence experiment with phase
//!   drift and pump-interference phase retrieval.
//! * [`analysis`] bins records into a coincidence map and extracts fringe
//!   visibility and CHSH values.
//! * [`config`] and [`cli`] wire everything into reproducible runs.

pub mod analysis;
pub mod awg;
pub mod cli;
pub mod config;
pub mod numeric;
pub mod pair_source;
pub mod sim;
pub mod state;

/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Converts a loss or gain in dB to an intensity (power) ratio.
pub fn db_to_intensity(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Converts a loss or gain in dB to a field amplitude ratio.
pub fn db_to_amplitude(db: f64) -> f64 {
    10f64.powf(db / 20.0)
}
