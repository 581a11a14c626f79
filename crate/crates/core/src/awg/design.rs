use super::AwgError;
use crate::SPEED_OF_LIGHT;
use serde::{Deserialize, Serialize};

/// Upper bound accepted for the array-waveguide group index.
///
/// Kept well above physical silica/silicon values because the published
/// geometry only reproduces its measured channel spacing with a calibrated
/// effective index ratio.
pub const MAX_GROUP_INDEX: f64 = 20.0;

/// Slab and array geometry of an arrayed waveguide grating. Lengths in metres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AwgDesign {
    /// Waveguide pitch `d` at the slab facets.
    pub pitch: f64,
    /// Slab focal length `f`.
    pub focal_length: f64,
    /// Path-length increment `ΔL` between neighbouring array waveguides.
    pub path_increment: f64,
    /// Effective index of the slab mode, `n_s`.
    pub slab_index: f64,
    /// Group index of the array waveguides, `n_a`.
    pub group_index: f64,
    /// Center wavelength `λ0`.
    pub center_wavelength: f64,
    pub array_count: u32,
    pub grating_order: u32,
    /// Peak insertion loss in dB, stored as a non-positive number.
    pub insertion_loss_db: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChannelSpacing {
    /// Δλ in metres.
    pub wavelength: f64,
    /// Δν in hertz (first-order conversion at λ0).
    pub frequency: f64,
}

/// Logarithmic sensitivities `∂ln Δλ / ∂ln p` of the channel spacing to each
/// design parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogSensitivities {
    pub pitch: f64,
    pub focal_length: f64,
    pub path_increment: f64,
    pub slab_index: f64,
    pub group_index: f64,
    pub center_wavelength: f64,
}

impl AwgDesign {
    /// Fabricated geometry of the two-source demonstration chip, with the
    /// group index calibrated so that the channel spacing is 200 GHz.
    pub fn paper() -> Self {
        let uncalibrated = Self {
            pitch: 30e-6,
            focal_length: 1.75e-3,
            path_increment: 63e-6,
            slab_index: 1.45,
            group_index: 1.45,
            center_wavelength: 1560.6e-9,
            array_count: 100,
            grating_order: 53,
            insertion_loss_db: -6.7,
        };
        uncalibrated
            .calibrated_to(200e9)
            .expect("paper geometry calibrates")
    }

    pub fn center_frequency(&self) -> f64 {
        SPEED_OF_LIGHT / self.center_wavelength
    }

    /// Returns a copy whose group index is chosen so that `channel_spacing`
    /// yields `delta_nu` hertz; the slab index is kept.
    pub fn calibrated_to(&self, delta_nu: f64) -> Result<Self, AwgError> {
        if !(delta_nu.is_finite() && delta_nu > 0.0) {
            return Err(AwgError::InvalidDesign {
                field: "delta_nu",
                reason: format!("calibration target must be positive, got {delta_nu}"),
            });
        }
        let target_dlambda = delta_nu * self.center_wavelength.powi(2) / SPEED_OF_LIGHT;
        let group_index = self.slab_index * self.center_wavelength * self.pitch.powi(2)
            / (self.focal_length * self.path_increment * target_dlambda);
        let design = Self {
            group_index,
            ..*self
        };
        design.validate()?;
        Ok(design)
    }

    pub fn validate(&self) -> Result<(), AwgError> {
        let positive = |field: &'static str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(AwgError::InvalidDesign {
                    field,
                    reason: format!("must be finite and > 0, got {v}"),
                })
            }
        };
        positive("pitch", self.pitch)?;
        positive("focal_length", self.focal_length)?;
        positive("path_increment", self.path_increment)?;
        if !(self.slab_index > 1.0 && self.slab_index < 4.0) {
            return Err(AwgError::InvalidDesign {
                field: "slab_index",
                reason: format!("must lie in (1, 4), got {}", self.slab_index),
            });
        }
        if !(self.group_index > 1.0 && self.group_index < MAX_GROUP_INDEX) {
            return Err(AwgError::InvalidDesign {
                field: "group_index",
                reason: format!(
                    "must lie in (1, {MAX_GROUP_INDEX}), got {}",
                    self.group_index
                ),
            });
        }
        if !(self.center_wavelength > 1.0e-6 && self.center_wavelength < 2.0e-6) {
            return Err(AwgError::InvalidDesign {
                field: "center_wavelength",
                reason: format!(
                    "must lie in (1, 2) um, got {} m",
                    self.center_wavelength
                ),
            });
        }
        if self.array_count == 0 {
            return Err(AwgError::InvalidDesign {
                field: "array_count",
                reason: "must be positive".into(),
            });
        }
        if self.grating_order == 0 {
            return Err(AwgError::InvalidDesign {
                field: "grating_order",
                reason: "must be positive".into(),
            });
        }
        if !(self.insertion_loss_db.is_finite() && self.insertion_loss_db <= 0.0) {
            return Err(AwgError::InvalidDesign {
                field: "insertion_loss_db",
                reason: format!("must be <= 0 dB, got {}", self.insertion_loss_db),
            });
        }
        Ok(())
    }

    pub fn log_sensitivities(&self) -> LogSensitivities {
        LogSensitivities {
            pitch: 2.0,
            focal_length: -1.0,
            path_increment: -1.0,
            slab_index: 1.0,
            group_index: -1.0,
            center_wavelength: 1.0,
        }
    }
}

/// Channel spacing `Δλ = n_s λ0 d² / (n_a f ΔL)` and its frequency equivalent.
pub fn channel_spacing(design: &AwgDesign) -> Result<ChannelSpacing, AwgError> {
    design.validate()?;
    let wavelength = design.slab_index * design.center_wavelength * design.pitch.powi(2)
        / (design.group_index * design.focal_length * design.path_increment);
    let frequency = SPEED_OF_LIGHT * wavelength / design.center_wavelength.powi(2);
    if !(wavelength.is_finite() && wavelength > 0.0 && frequency.is_finite()) {
        return Err(AwgError::InvalidDesign {
            field: "channel_spacing",
            reason: format!("non-finite result {wavelength}"),
        });
    }
    Ok(ChannelSpacing {
        wavelength,
        frequency,
    })
}

/// Focal-spot displacement per unit wavelength, `Δx/Δλ = n_a f ΔL / (n_s d λ0)`.
pub fn spatial_dispersion(design: &AwgDesign) -> Result<f64, AwgError> {
    design.validate()?;
    let dispersion = design.group_index * design.focal_length * design.path_increment
        / (design.slab_index * design.pitch * design.center_wavelength);
    if !dispersion.is_finite() {
        return Err(AwgError::InvalidDesign {
            field: "spatial_dispersion",
            reason: format!("non-finite result {dispersion}"),
        });
    }
    Ok(dispersion)
}

/// First-order relative channel-spacing error caused by a relative change
/// `delta_na_rel` of the group index. Since `Δλ ∝ 1/n_a` this is `-delta_na_rel`.
pub fn tolerance_propagation(design: &AwgDesign, delta_na_rel: f64) -> Result<f64, AwgError> {
    design.validate()?;
    if !(delta_na_rel.abs() < 0.1) {
        return Err(AwgError::InvalidDesign {
            field: "delta_na_rel",
            reason: format!("must satisfy |delta| < 0.1, got {delta_na_rel}"),
        });
    }
    Ok(design.log_sensitivities().group_index * delta_na_rel)
}
