//! Four-wave-mixing photon-pair model.
//!
//! Pairs obey `2ν_p = ν_s + ν_i`. Under a quasi-cw pump the joint spectral
//! amplitude collapses onto that anti-diagonal, weighted by the signal and
//! idler passbands; with a pulsed pump the ridge acquires the width of the
//! pump self-convolution.

use crate::awg::TransmissionSpectrum;
use crate::numeric::FrequencyGrid;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{LN_2, PI};
use std::io::Write;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PairError {
    #[error("invalid pump: {0}")]
    InvalidPump(String),
    #[error("channel offset must be >= 1 for non-degenerate pairs")]
    Degenerate,
    #[error("pump bandwidth {pump_hz:.3e} Hz is not much narrower than passband {passband_hz:.3e} Hz (ratio must be < 0.1)")]
    PumpTooBroad { pump_hz: f64, passband_hz: f64 },
    #[error("signal passband and mirrored idler passband do not overlap")]
    EmptyJsa,
    #[error("grid cell {cell_hz:.3e} Hz too coarse for pump bandwidth {pump_hz:.3e} Hz (need cell <= bandwidth/2)")]
    Resolution { cell_hz: f64, pump_hz: f64 },
}

/// Gaussian time-bandwidth product `2 ln2 / π` of a transform-limited pulse.
pub const GAUSSIAN_TIME_BANDWIDTH: f64 = 2.0 * LN_2 / PI;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PumpSpec {
    /// ν_p in Hz.
    pub center_frequency: f64,
    pub repetition_rate: f64,
    pub pulse_width: f64,
    /// Intensity FWHM of the pump spectrum (Hz).
    pub bandwidth_fwhm: f64,
    /// Mean pairs per gate generated in each source waveguide.
    pub pair_probability: f64,
    /// Pump leakage into the signal/idler outputs, dB (≤ 0).
    pub leakage_rejection_db: f64,
}

impl PumpSpec {
    /// 100 MHz, 200 ps pulses with 2.2 GHz bandwidth at `center_frequency`.
    pub fn paper(center_frequency: f64) -> Self {
        Self {
            center_frequency,
            repetition_rate: 100e6,
            pulse_width: 200e-12,
            bandwidth_fwhm: 2.2e9,
            pair_probability: 0.01,
            leakage_rejection_db: -35.0,
        }
    }

    /// Spectral FWHM of a transform-limited Gaussian pulse of the given duration.
    pub fn transform_limited_bandwidth(pulse_width: f64) -> f64 {
        GAUSSIAN_TIME_BANDWIDTH / pulse_width
    }

    pub fn validate(&self) -> Result<(), PairError> {
        let bad = |msg: String| Err(PairError::InvalidPump(msg));
        if !(self.center_frequency.is_finite() && self.center_frequency > 0.0) {
            return bad(format!("center frequency {}", self.center_frequency));
        }
        if !(self.bandwidth_fwhm > 0.0 && self.bandwidth_fwhm.is_finite()) {
            return bad(format!("bandwidth must be > 0, got {}", self.bandwidth_fwhm));
        }
        if !(self.repetition_rate > 0.0) {
            return bad(format!("repetition rate must be > 0, got {}", self.repetition_rate));
        }
        if !(self.pulse_width > 0.0) {
            return bad(format!("pulse width must be > 0, got {}", self.pulse_width));
        }
        if !(0.0..=0.5).contains(&self.pair_probability) {
            return bad(format!(
                "pair probability must lie in [0, 0.5], got {}",
                self.pair_probability
            ));
        }
        if !(self.leakage_rejection_db <= 0.0) {
            return bad(format!("leakage must be <= 0 dB, got {}", self.leakage_rejection_db));
        }
        Ok(())
    }
}

/// Signal and idler channel frequencies `ν_p ± mΔν`.
///
/// The idler is formed as `2ν_p - ν_s`, so `ν_s + ν_i == 2ν_p` holds exactly
/// in floating point.
pub fn sfwm_channel_pair(
    pump: &PumpSpec,
    delta_nu: f64,
    channel_offset: u32,
) -> Result<(f64, f64), PairError> {
    if channel_offset == 0 {
        return Err(PairError::Degenerate);
    }
    let signal = pump.center_frequency + channel_offset as f64 * delta_nu;
    let idler = 2.0 * pump.center_frequency - signal;
    Ok((signal, idler))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JsaCell {
    pub signal: usize,
    pub idler: usize,
    pub amplitude: Complex64,
}

/// Sparse joint spectral amplitude on a `(ν_s, ν_i)` cell grid, normalized so
/// that `Σ |S|² · cell area = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointSpectralAmplitude {
    pub signal_grid: FrequencyGrid,
    pub idler_grid: FrequencyGrid,
    pub pump_frequency: f64,
    /// Non-zero cells sorted by `(signal, idler)`.
    cells: Vec<JsaCell>,
    /// `Σ |S|² · area` before normalization: relative pair brightness of the
    /// channel pair on this grid.
    brightness: f64,
}

impl JointSpectralAmplitude {
    pub fn cells(&self) -> &[JsaCell] {
        &self.cells
    }

    pub fn brightness(&self) -> f64 {
        self.brightness
    }

    pub fn cell_area(&self) -> f64 {
        self.signal_grid.step * self.idler_grid.step
    }

    pub fn norm(&self) -> f64 {
        self.cells.iter().map(|c| c.amplitude.norm_sqr()).sum::<f64>() * self.cell_area()
    }

    pub fn amplitude(&self, signal: usize, idler: usize) -> Complex64 {
        self.cells
            .binary_search_by(|c| (c.signal, c.idler).cmp(&(signal, idler)))
            .map(|i| self.cells[i].amplitude)
            .unwrap_or_default()
    }

    pub fn shares_grid(&self, other: &Self) -> bool {
        self.signal_grid.matches(&other.signal_grid) && self.idler_grid.matches(&other.idler_grid)
    }

    /// Signal marginal `∫ |S|² dν_i` per signal grid point.
    pub fn signal_marginal(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.signal_grid.len()];
        for c in &self.cells {
            out[c.signal] += c.amplitude.norm_sqr() * self.idler_grid.step;
        }
        out
    }
}

/// Joint spectral amplitude in the quasi-cw limit,
/// `S(ν_s, ν_i) ∝ f(ν_s) g(ν_i) δ(2ν_p − ν_s − ν_i)`.
///
/// The delta function is discretized onto the cells crossed by the line
/// `ν_s + ν_i = 2ν_p`, each weighted by the length of its crossing relative to
/// a full diagonal. The phase-matching envelope is taken as flat.
pub fn build_jsa_quasi_cw(
    signal: &TransmissionSpectrum,
    idler: &TransmissionSpectrum,
    pump: &PumpSpec,
) -> Result<JointSpectralAmplitude, PairError> {
    pump.validate()?;
    let passband = signal.fwhm.min(idler.fwhm);
    if !(pump.bandwidth_fwhm / passband < 0.1) {
        return Err(PairError::PumpTooBroad {
            pump_hz: pump.bandwidth_fwhm,
            passband_hz: passband,
        });
    }
    let sg = signal.grid;
    let ig = idler.grid;
    let sum = 2.0 * pump.center_frequency;
    let (hs, hi) = (sg.step, ig.step);

    let mut cells = Vec::new();
    let mut peak = 0.0f64;
    for i in 0..sg.len() {
        let s_lo = sg.value(i) - 0.5 * hs;
        let s_hi = sg.value(i) + 0.5 * hs;
        // idler cells whose extent meets [sum - s_hi, sum - s_lo]
        let k_lo = ig.position(sum - s_hi - 0.5 * hi).floor().max(0.0) as usize;
        let k_hi = ig.position(sum - s_lo + 0.5 * hi).ceil();
        if k_hi < 0.0 {
            continue;
        }
        let k_hi = (k_hi as usize).min(ig.len() - 1);
        for k in k_lo..=k_hi {
            let t = ig.value(k);
            let lo = s_lo.max(sum - (t + 0.5 * hi));
            let hi_ = s_hi.min(sum - (t - 0.5 * hi));
            let weight = (hi_ - lo) / hs;
            if weight <= 1e-9 {
                continue;
            }
            let mid = 0.5 * (lo + hi_);
            let amplitude = signal.amplitude_at(mid) * idler.amplitude_at(sum - mid) * weight;
            if amplitude.norm_sqr() > 0.0 {
                peak = peak.max(amplitude.norm());
                cells.push(JsaCell {
                    signal: i,
                    idler: k,
                    amplitude,
                });
            }
        }
    }

    let scale = signal.amplitude.iter().map(|a| a.norm()).fold(0.0, f64::max)
        * idler.amplitude.iter().map(|a| a.norm()).fold(0.0, f64::max);
    if cells.is_empty() || peak <= 1e-12 * scale {
        return Err(PairError::EmptyJsa);
    }
    let area = hs * hi;
    let brightness: f64 = cells.iter().map(|c| c.amplitude.norm_sqr()).sum::<f64>() * area;
    let inv = 1.0 / brightness.sqrt();
    for c in &mut cells {
        c.amplitude *= inv;
    }
    Ok(JointSpectralAmplitude {
        signal_grid: sg,
        idler_grid: ig,
        pump_frequency: pump.center_frequency,
        cells,
        brightness,
    })
}

/// Sum-frequency intensity envelope of a Gaussian pump whose spectral
/// intensity has FWHM `bandwidth`.
///
/// The pair amplitude follows the pump self-convolution, a Gaussian whose
/// intensity FWHM is `√2 · bandwidth`. The envelope is cut to zero beyond
/// three pump widths.
pub fn pump_pair_envelope(detuning: f64, bandwidth: f64) -> f64 {
    if detuning.abs() > 3.0 * bandwidth {
        return 0.0;
    }
    (-4.0 * LN_2 * detuning * detuning / (2.0 * bandwidth * bandwidth)).exp()
}

#[derive(Debug, Clone, PartialEq)]
struct JsiRow {
    idler_start: usize,
    values: Vec<f64>,
}

/// Joint spectral intensity banded around the energy-conservation ridge,
/// normalized to unit maximum. Cells outside the band are exactly zero.
#[derive(Debug, Clone, PartialEq)]
pub struct JointSpectralIntensity {
    pub signal_grid: FrequencyGrid,
    pub idler_grid: FrequencyGrid,
    pub pump_frequency: f64,
    rows: Vec<JsiRow>,
}

impl JointSpectralIntensity {
    pub fn get(&self, signal: usize, idler: usize) -> f64 {
        let row = &self.rows[signal];
        idler
            .checked_sub(row.idler_start)
            .and_then(|k| row.values.get(k))
            .copied()
            .unwrap_or(0.0)
    }

    /// Iterates `(signal index, idler index, intensity)` over non-zero cells.
    pub fn nonzero(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.rows.iter().enumerate().flat_map(|(i, row)| {
            row.values
                .iter()
                .enumerate()
                .filter(|(_, &v)| v > 0.0)
                .map(move |(k, &v)| (i, row.idler_start + k, v))
        })
    }

    /// Location `(ν_s, ν_i)` of the maximum.
    pub fn peak(&self) -> (f64, f64) {
        let (i, k, _) = self
            .nonzero()
            .max_by(|a, b| a.2.total_cmp(&b.2))
            .unwrap_or((0, 0, 0.0));
        (self.signal_grid.value(i), self.idler_grid.value(k))
    }

    /// Writes `nu_s_hz,nu_i_hz,intensity` for every non-zero cell.
    pub fn write_csv<W: Write>(&self, writer: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["nu_s_hz", "nu_i_hz", "intensity"])?;
        for (i, k, v) in self.nonzero() {
            w.write_record(&[
                self.signal_grid.value(i).to_string(),
                self.idler_grid.value(k).to_string(),
                v.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Joint spectral intensity `|f(ν_s)|² |g(ν_i)|² |α(ν_s + ν_i − 2ν_p)|²` for a
/// Gaussian pump with the spec's bandwidth, on the passband grids.
pub fn build_jsi_pulsed(
    signal: &TransmissionSpectrum,
    idler: &TransmissionSpectrum,
    pump: &PumpSpec,
) -> Result<JointSpectralIntensity, PairError> {
    pump.validate()?;
    let sg = signal.grid;
    let ig = idler.grid;
    let cell = sg.step.max(ig.step);
    let bw = pump.bandwidth_fwhm;
    if cell > 0.5 * bw {
        return Err(PairError::Resolution {
            cell_hz: cell,
            pump_hz: bw,
        });
    }
    let sum = 2.0 * pump.center_frequency;
    let reach = 3.0 * bw;
    let fi = signal.intensity();
    let gi = idler.intensity();

    let mut rows = Vec::with_capacity(sg.len());
    let mut peak = 0.0f64;
    for (i, &fs) in fi.iter().enumerate() {
        let s = sg.value(i);
        let k_lo = ig.position(sum - s - reach).ceil().max(0.0) as usize;
        let k_hi = ig.position(sum - s + reach).floor();
        if k_hi < 0.0 || k_lo >= ig.len() {
            rows.push(JsiRow {
                idler_start: 0,
                values: Vec::new(),
            });
            continue;
        }
        let k_hi = (k_hi as usize).min(ig.len() - 1);
        let values: Vec<f64> = (k_lo..=k_hi)
            .map(|k| fs * gi[k] * pump_pair_envelope(s + ig.value(k) - sum, bw))
            .collect();
        peak = values.iter().copied().fold(peak, f64::max);
        rows.push(JsiRow {
            idler_start: k_lo,
            values,
        });
    }
    if peak <= 0.0 {
        return Err(PairError::EmptyJsa);
    }
    for row in &mut rows {
        row.values.iter_mut().for_each(|v| *v /= peak);
    }
    Ok(JointSpectralIntensity {
        signal_grid: sg,
        idler_grid: ig,
        pump_frequency: pump.center_frequency,
        rows,
    })
}
