//! Parametric model of the AWG demultiplexer.
//!
//! The grating is described by its slab/array geometry ([`AwgDesign`]); from it
//! we derive the channel spacing and focal-spot dispersion, lay out the
//! input and output waveguides for an `N`-source entanglement device
//! ([`plan_ports`]) and synthesize per-path transmission spectra from a
//! Gaussian or flat-top passband model ([`port_transmission`]).

mod design;
mod passband;
mod ports;

pub use design::{
    channel_spacing, spatial_dispersion, tolerance_propagation, AwgDesign, ChannelSpacing,
    LogSensitivities,
};
pub use passband::{
    port_transmission, GridSpec, PassbandModel, PassbandShape, PortOffset, TransmissionSpectrum,
};
pub use ports::{plan_ports, PortAssignment, PortRole};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AwgError {
    #[error("invalid design: {field} {reason}")]
    InvalidDesign { field: &'static str, reason: String },
    #[error("invalid port plan: {0}")]
    InvalidPlan(String),
    #[error("port collision: {}", describe_collisions(.0))]
    PortCollision(Vec<(i32, Vec<String>)>),
    #[error("port index {index} exceeds facet grid capacity (|index| <= {limit})")]
    Capacity { index: i32, limit: i32 },
    #[error("passband fwhm {fwhm_hz:.3e} Hz must be narrower than channel spacing {spacing_hz:.3e} Hz")]
    PassbandTooWide { fwhm_hz: f64, spacing_hz: f64 },
    #[error("invalid passband model: {0}")]
    InvalidPassband(String),
    #[error("source {source_index} out of range for {n_sources} sources")]
    SourceOutOfRange { source_index: usize, n_sources: usize },
    #[error("invalid spectrum: {0}")]
    InvalidSpectrum(String),
}

fn describe_collisions(collisions: &[(i32, Vec<String>)]) -> String {
    collisions
        .iter()
        .map(|(idx, roles)| format!("grid line {idx} shared by {}", roles.join(", ")))
        .collect::<Vec<_>>()
        .join("; ")
}

/// Signal (high-frequency) or idler (low-frequency) arm of a pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Arm {
    Signal,
    Idler,
}

impl Arm {
    /// `+1` for the signal arm, `-1` for the idler arm.
    pub fn sign(self) -> f64 {
        match self {
            Arm::Signal => 1.0,
            Arm::Idler => -1.0,
        }
    }
}
