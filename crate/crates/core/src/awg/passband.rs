use super::{channel_spacing, AwgDesign, AwgError, Arm, PortAssignment};
use crate::numeric::{self, FrequencyGrid};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::LN_2;
use std::io::Write;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PassbandShape {
    Gaussian,
    /// Super-Gaussian `exp(-ln2 (2x/fwhm)^(2 order))`; order 1 is Gaussian.
    FlatTop { order: u32 },
}

/// Center-frequency errors (Hz) of one source's signal and idler passbands.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PortOffset {
    pub signal: f64,
    pub idler: f64,
}

impl PortOffset {
    pub fn for_arm(&self, arm: Arm) -> f64 {
        match arm {
            Arm::Signal => self.signal,
            Arm::Idler => self.idler,
        }
    }
}

/// Sampling of a passband: resolution in Hz and half-span in channel spacings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub resolution: f64,
    pub half_span_channels: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            resolution: 0.5e9,
            half_span_channels: 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PassbandModel {
    pub shape: PassbandShape,
    /// Intensity 3-dB width in Hz.
    pub fwhm: f64,
    /// Per-source center errors; sources beyond the list have none.
    pub port_offsets: Vec<PortOffset>,
    pub grid: GridSpec,
}

impl PassbandModel {
    pub fn gaussian(fwhm: f64) -> Self {
        Self {
            shape: PassbandShape::Gaussian,
            fwhm,
            port_offsets: Vec::new(),
            grid: GridSpec::default(),
        }
    }

    pub fn with_offsets(mut self, offsets: Vec<PortOffset>) -> Self {
        self.port_offsets = offsets;
        self
    }

    pub fn with_grid(mut self, grid: GridSpec) -> Self {
        self.grid = grid;
        self
    }

    pub fn offset(&self, source: usize, arm: Arm) -> f64 {
        self.port_offsets
            .get(source)
            .map(|o| o.for_arm(arm))
            .unwrap_or(0.0)
    }

    /// Intensity transmission relative to the peak at `detuning` Hz from center.
    pub fn relative_intensity(&self, detuning: f64) -> f64 {
        let x = 2.0 * detuning.abs() / self.fwhm;
        match self.shape {
            PassbandShape::Gaussian => (-LN_2 * x * x).exp(),
            PassbandShape::FlatTop { order } => (-LN_2 * x.powi(2 * order as i32)).exp(),
        }
    }

    pub fn validate(&self) -> Result<(), AwgError> {
        if !(self.fwhm.is_finite() && self.fwhm > 0.0) {
            return Err(AwgError::InvalidPassband(format!(
                "fwhm must be positive, got {}",
                self.fwhm
            )));
        }
        if let PassbandShape::FlatTop { order } = self.shape {
            if order == 0 {
                return Err(AwgError::InvalidPassband("flat-top order must be >= 1".into()));
            }
        }
        if !(self.grid.resolution > 0.0 && self.grid.half_span_channels > 0.0) {
            return Err(AwgError::InvalidPassband("grid resolution and span must be positive".into()));
        }
        if self
            .port_offsets
            .iter()
            .any(|o| !o.signal.is_finite() || !o.idler.is_finite())
        {
            return Err(AwgError::InvalidPassband("port offsets must be finite".into()));
        }
        Ok(())
    }
}

/// Amplitude transmission of one input-to-output path sampled on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TransmissionSpectrum {
    pub grid: FrequencyGrid,
    pub amplitude: Vec<Complex64>,
    pub center_frequency: f64,
    pub fwhm: f64,
}

impl TransmissionSpectrum {
    pub fn from_samples(
        grid: FrequencyGrid,
        amplitude: Vec<Complex64>,
        center_frequency: f64,
        fwhm: f64,
    ) -> Result<Self, AwgError> {
        if amplitude.len() != grid.len() {
            return Err(AwgError::InvalidSpectrum(format!(
                "{} samples for a grid of {}",
                amplitude.len(),
                grid.len()
            )));
        }
        if let Some(a) = amplitude.iter().find(|a| a.norm() > 1.0 + 1e-12 || !a.is_finite()) {
            return Err(AwgError::InvalidSpectrum(format!(
                "|amplitude| must be <= 1, found {}",
                a.norm()
            )));
        }
        Ok(Self {
            grid,
            amplitude,
            center_frequency,
            fwhm,
        })
    }

    /// Linear interpolation of the amplitude; zero outside the grid.
    pub fn amplitude_at(&self, freq: f64) -> Complex64 {
        let pos = self.grid.position(freq);
        let last = (self.amplitude.len() - 1) as f64;
        if !(pos > -1e-9 && pos < last + 1e-9) {
            return Complex64::new(0.0, 0.0);
        }
        let pos = pos.clamp(0.0, last);
        let i = pos.floor() as usize;
        if i + 1 >= self.amplitude.len() {
            return self.amplitude[i];
        }
        let frac = pos - i as f64;
        self.amplitude[i] * (1.0 - frac) + self.amplitude[i + 1] * frac
    }

    pub fn intensity(&self) -> Vec<f64> {
        self.amplitude.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn peak_intensity(&self) -> f64 {
        self.intensity().into_iter().fold(0.0, f64::max)
    }

    /// 3-dB width measured from the sampled intensity.
    pub fn measured_fwhm(&self) -> Option<f64> {
        let xs: Vec<f64> = self.grid.iter().collect();
        numeric::fwhm(&xs, &self.intensity())
    }

    /// Writes `frequency_hz,amplitude_re,amplitude_im` rows.
    pub fn write_csv<W: Write>(&self, writer: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["frequency_hz", "amplitude_re", "amplitude_im"])?;
        for (f, a) in self.grid.iter().zip(&self.amplitude) {
            w.write_record(&[f.to_string(), a.re.to_string(), a.im.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Transmission of source `source` (0-based) into its signal or idler output.
///
/// The passband is centered at `ν_p ± mΔν` plus the configured port offset,
/// with `ν_p = c/λ0`. The sampling grid is centered on the nominal channel so
/// that signal and idler grids mirror each other about the pump.
pub fn port_transmission(
    design: &AwgDesign,
    assignment: &PortAssignment,
    source: usize,
    arm: Arm,
    passband: &PassbandModel,
) -> Result<TransmissionSpectrum, AwgError> {
    passband.validate()?;
    if source >= assignment.n_sources {
        return Err(AwgError::SourceOutOfRange {
            source_index: source,
            n_sources: assignment.n_sources,
        });
    }
    let spacing = channel_spacing(design)?.frequency;
    if passband.fwhm >= spacing {
        return Err(AwgError::PassbandTooWide {
            fwhm_hz: passband.fwhm,
            spacing_hz: spacing,
        });
    }
    let pump = design.center_frequency();
    let nominal = pump + arm.sign() * assignment.channel_offset as f64 * spacing;
    let center = nominal + passband.offset(source, arm);
    let peak = crate::db_to_amplitude(design.insertion_loss_db);

    let grid = FrequencyGrid::spanning(
        nominal,
        passband.grid.half_span_channels * spacing,
        passband.grid.resolution,
    );
    let amplitude: Vec<Complex64> = grid
        .iter()
        .map(|f| Complex64::new(peak * passband.relative_intensity(f - center).sqrt(), 0.0))
        .collect();

    let edge = amplitude[0].norm().max(amplitude[amplitude.len() - 1].norm());
    if edge > 1e-6 * peak {
        return Err(AwgError::InvalidPassband(format!(
            "passband not contained in grid (edge amplitude {:.2e} of peak)",
            edge / peak
        )));
    }
    TransmissionSpectrum::from_samples(grid, amplitude, center, passband.fwhm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::awg::plan_ports;

    fn setup() -> (AwgDesign, PortAssignment) {
        let d = AwgDesign::paper();
        let p = plan_ports(&d, 2, 3).unwrap();
        (d, p)
    }

    #[test]
    fn gaussian_passband_center_width_and_peak() {
        let (d, p) = setup();
        let pb = PassbandModel::gaussian(90e9);
        let t = port_transmission(&d, &p, 0, Arm::Signal, &pb).unwrap();
        assert_eq!(t.center_frequency, d.center_frequency() + 600e9);
        let w = t.measured_fwhm().unwrap();
        assert!(((w - 90e9) / 90e9).abs() < 0.01, "fwhm {w}");
        let peak = t.peak_intensity();
        assert!((peak - 10f64.powf(-0.67)).abs() < 1e-12);
    }

    #[test]
    fn idler_sits_below_pump() {
        let (d, p) = setup();
        let t = port_transmission(&d, &p, 1, Arm::Idler, &PassbandModel::gaussian(90e9)).unwrap();
        assert!((t.center_frequency - (d.center_frequency() - 600e9)).abs() < 1e-3);
    }

    #[test]
    fn offsets_move_the_center_exactly() {
        let (d, p) = setup();
        let pb = PassbandModel::gaussian(90e9).with_offsets(vec![
            PortOffset::default(),
            PortOffset {
                signal: 7e9,
                idler: -3e9,
            },
        ]);
        let nominal = port_transmission(&d, &p, 1, Arm::Signal, &PassbandModel::gaussian(90e9))
            .unwrap()
            .center_frequency;
        let t = port_transmission(&d, &p, 1, Arm::Signal, &pb).unwrap();
        assert_eq!(t.center_frequency - nominal, 7e9);
        let peak_idx = t
            .intensity()
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        assert!((t.grid.value(peak_idx) - t.center_frequency).abs() < 0.25e9 + 1.0);
    }

    #[test]
    fn too_wide_passband_rejected() {
        let (d, p) = setup();
        assert!(matches!(
            port_transmission(&d, &p, 0, Arm::Signal, &PassbandModel::gaussian(200e9)),
            Err(AwgError::PassbandTooWide { .. })
        ));
    }

    #[test]
    fn source_out_of_range() {
        let (d, p) = setup();
        assert!(matches!(
            port_transmission(&d, &p, 2, Arm::Signal, &PassbandModel::gaussian(90e9)),
            Err(AwgError::SourceOutOfRange { .. })
        ));
    }

    #[test]
    fn flat_top_has_declared_width() {
        let (d, p) = setup();
        let pb = PassbandModel {
            shape: PassbandShape::FlatTop { order: 3 },
            ..PassbandModel::gaussian(90e9)
        };
        let t = port_transmission(&d, &p, 0, Arm::Idler, &pb).unwrap();
        let w = t.measured_fwhm().unwrap();
        assert!(((w - 90e9) / 90e9).abs() < 0.01);
    }

    #[test]
    fn amplitude_bounded_and_vanishing_at_edges() {
        let (d, p) = setup();
        let t = port_transmission(&d, &p, 0, Arm::Signal, &PassbandModel::gaussian(90e9)).unwrap();
        assert!(t.amplitude.iter().all(|a| a.norm() <= 1.0));
        assert!(t.amplitude[0].norm() < 1e-12);
        assert_eq!(t.amplitude_at(t.grid.first() - 1e9), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn csv_header() {
        let (d, p) = setup();
        let t = port_transmission(&d, &p, 0, Arm::Signal, &PassbandModel::gaussian(90e9)).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("frequency_hz,amplitude_re,amplitude_im\n"));
        assert_eq!(text.lines().count(), t.grid.len() + 1);
    }
}
