use serde::{Deserialize, Serialize};

/// Independent random-walk drift of the two interferometer phases.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftModel {
    /// Standard deviation of the phase step per record, radians.
    pub step_std: f64,
    /// Seconds between phase retrievals.
    pub record_interval: f64,
    /// Gaussian phase jitter within a record, radians per interferometer.
    pub fast_noise_std: f64,
}

impl DriftModel {
    pub fn paper() -> Self {
        Self {
            step_std: 2f64.to_radians(),
            record_interval: 0.2,
            fast_noise_std: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), super::SimError> {
        if !(self.step_std >= 0.0 && self.fast_noise_std >= 0.0) {
            return Err(super::SimError::InvalidParameter(
                "drift standard deviations must be >= 0".into(),
            ));
        }
        if !(self.record_interval > 0.0) {
            return Err(super::SimError::InvalidParameter(format!(
                "record interval must be > 0, got {}",
                self.record_interval
            )));
        }
        Ok(())
    }
}
