use super::SimError;
use crate::numeric::{circular_diff, wrap_tau};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

/// Phase bin widths: `fine` where the pump interference is steep and
/// `coarse` in the flat zones centered on 0 and π. Radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseBinning {
    pub fine: f64,
    pub coarse: f64,
}

impl Default for PhaseBinning {
    fn default() -> Self {
        Self {
            fine: 3f64.to_radians(),
            coarse: 45f64.to_radians(),
        }
    }
}

impl PhaseBinning {
    /// Slope `|dI/dφ| = |sin φ|/2` below which a phase counts as flat; the
    /// flat zones are then exactly `coarse` wide.
    pub fn flat_threshold(&self) -> f64 {
        0.5 * (0.5 * self.coarse).sin()
    }

    pub fn is_flat(&self, phase: f64) -> bool {
        0.5 * phase.sin().abs() < self.flat_threshold()
    }

    pub fn bin_size(&self, phase: f64) -> f64 {
        if self.is_flat(phase) {
            self.coarse
        } else {
            self.fine
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseEstimate {
    pub phase: f64,
    pub bin_size: f64,
    pub flat_region: bool,
}

/// Inverts `I = (1 + cos φ)/2`, choosing between `φ` and `2π − φ` by
/// continuity with `previous_phase`.
pub fn retrieve_phase(
    intensity: f64,
    previous_phase: f64,
    binning: &PhaseBinning,
) -> Result<PhaseEstimate, SimError> {
    if !(0.0..=1.0).contains(&intensity) {
        return Err(SimError::Calibration(intensity));
    }
    let principal = (2.0 * intensity - 1.0).clamp(-1.0, 1.0).acos();
    let mirrored = wrap_tau(TAU - principal);
    let phase = if circular_diff(principal, previous_phase).abs()
        <= circular_diff(mirrored, previous_phase).abs()
    {
        principal
    } else {
        mirrored
    };
    Ok(PhaseEstimate {
        phase,
        bin_size: binning.bin_size(phase),
        flat_region: binning.is_flat(phase),
    })
}

/// Noisy pump-interference readout followed by [`retrieve_phase`].
///
/// A single intensity cannot tell `φ` from `−φ`, so continuity alone loses
/// the branch whenever the phase wanders through 0 or π. While the previous
/// estimate sits in a flat zone the branch is taken from the sign of the
/// fringe slope, as a small phase dither would reveal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseRetrieval {
    /// Standard deviation of the normalized intensity reading.
    pub intensity_noise: f64,
    pub binning: PhaseBinning,
}

impl Default for PhaseRetrieval {
    fn default() -> Self {
        Self {
            intensity_noise: 0.005,
            binning: PhaseBinning::default(),
        }
    }
}

impl PhaseRetrieval {
    pub fn measure<R: Rng + ?Sized>(
        &self,
        true_phase: f64,
        previous_estimate: f64,
        rng: &mut R,
    ) -> PhaseEstimate {
        let mut intensity = 0.5 * (1.0 + true_phase.cos());
        if self.intensity_noise > 0.0 {
            intensity += Normal::new(0.0, self.intensity_noise)
                .expect("finite noise")
                .sample(rng);
        }
        let prior = if self.binning.is_flat(previous_estimate) {
            true_phase
        } else {
            previous_estimate
        };
        // readings are rescaled onto the calibrated [0, 1] range
        retrieve_phase(intensity.clamp(0.0, 1.0), wrap_tau(prior), &self.binning)
            .expect("clamped intensity")
    }
}
