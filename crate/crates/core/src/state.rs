//! Path-entangled two-photon state, interferometric projection and
//! visibility.
//!
//! Source `j` emits into output pair `(A_j, B_j)` with coefficient
//! `c_j ∝ a_j √b_j e^{-iφ_j}`, where `a_j` is the pump-side amplitude and `b_j`
//! the channel-pair brightness carried by its joint spectral amplitude. The
//! projection couplers follow `ĉ₁† = (e^{-iφ_s} â₁† + i â₂†)/√2` (and likewise
//! for the idler), and we take the cross-arm factors of the two couplers to
//! combine to `+1`, so that
//!
//! ```text
//! P_c = ∫∫ |e^{i(φ_s+φ_i)} c₁ S₁ + c₂ S₂|² / 4
//! ```
//!
//! For identical channels this is `(1 + cos(φ_s+φ_i))/4`, i.e. the fringe
//! `C0 (1 − V cos(φ_A + φ_B + Δφ))` with `Δφ = π` at zero offsets.

use crate::awg::TransmissionSpectrum;
use crate::numeric::{self, max_circular_gap, wrap_tau, SinusoidFit};
use crate::pair_source::{JointSpectralAmplitude, JsaCell};
use num_complex::Complex64;
use serde::Serialize;
use std::cmp::Ordering;
use std::f64::consts::{FRAC_PI_2, PI};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StateError {
    #[error("expected {expected} entries, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("state needs at least one source")]
    Empty,
    #[error("amplitudes must be non-negative and not all zero")]
    Normalization,
    #[error("operation requires exactly two path modes, state has {0}")]
    NeedsTwoModes(usize),
    #[error("joint spectral amplitudes or spectra are not on a common grid")]
    GridMismatch,
    #[error("visibility undefined: both spectral products vanish")]
    UndefinedVisibility,
    #[error("phase sweep ill-conditioned: {0}")]
    IllConditioned(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathState {
    coefficients: Vec<Complex64>,
    jsas: Vec<JointSpectralAmplitude>,
}

/// `|c_j|` below this counts as an absent mode.
const ABSENT: f64 = 1e-12;

impl PathState {
    pub fn n_modes(&self) -> usize {
        self.coefficients.len()
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    pub fn jsas(&self) -> &[JointSpectralAmplitude] {
        &self.jsas
    }

    /// True when fewer than two sources contribute, i.e. the path state is a
    /// product state.
    pub fn is_separable(&self) -> bool {
        self.coefficients.iter().filter(|c| c.norm() > ABSENT).count() < 2
    }

    fn require_pair(&self) -> Result<(), StateError> {
        if self.n_modes() != 2 {
            return Err(StateError::NeedsTwoModes(self.n_modes()));
        }
        if !self.jsas[0].shares_grid(&self.jsas[1]) {
            return Err(StateError::GridMismatch);
        }
        Ok(())
    }

    /// Closed form of the coincidence fringe,
    /// `P_c(Σ) = mean + Re(e^{iΣ} · modulation)` with `Σ = φ_s + φ_i`.
    pub fn fringe_profile(&self) -> Result<FringeProfile, StateError> {
        self.require_pair()?;
        let (c1, c2) = (self.coefficients[0], self.coefficients[1]);
        let (s1, s2) = (&self.jsas[0], &self.jsas[1]);
        let mut overlap = Complex64::new(0.0, 0.0);
        merge_cells(s1.cells(), s2.cells(), |a, b| overlap += a * b.conj());
        overlap *= s1.cell_area();
        let mean = (c1.norm_sqr() * s1.norm() + c2.norm_sqr() * s2.norm()) / 4.0;
        let modulation = c1 * c2.conj() * overlap / 2.0;
        Ok(FringeProfile { mean, modulation })
    }
}

/// Sinusoidal coincidence fringe in the true sum phase `Σ = φ_s + φ_i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FringeProfile {
    pub mean: f64,
    pub modulation: Complex64,
}

impl FringeProfile {
    pub fn probability(&self, phase_sum: f64) -> f64 {
        self.mean + (Complex64::from_polar(1.0, phase_sum) * self.modulation).re
    }

    pub fn visibility(&self) -> f64 {
        self.modulation.norm() / self.mean
    }

    /// Δφ of the fringe `C0 (1 − V cos(φ_A + φ_B + Δφ))`, given the
    /// constant offsets `φ_A − φ_s` and `φ_B − φ_i`.
    pub fn delta_phi(&self, offset_s: f64, offset_i: f64) -> f64 {
        wrap_tau(self.modulation.arg() + PI - offset_s - offset_i)
    }
}

/// Walks two cell lists sorted by `(signal, idler)`, calling `f` on the union
/// with zeros filled in for missing cells.
fn merge_cells(a: &[JsaCell], b: &[JsaCell], mut f: impl FnMut(Complex64, Complex64)) {
    let zero = Complex64::new(0.0, 0.0);
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let order = match (a.get(i), b.get(j)) {
            (Some(x), Some(y)) => (x.signal, x.idler).cmp(&(y.signal, y.idler)),
            (Some(_), None) => Ordering::Less,
            (None, _) => Ordering::Greater,
        };
        match order {
            Ordering::Less => {
                f(a[i].amplitude, zero);
                i += 1;
            }
            Ordering::Greater => {
                f(zero, b[j].amplitude);
                j += 1;
            }
            Ordering::Equal => {
                f(a[i].amplitude, b[j].amplitude);
                i += 1;
                j += 1;
            }
        }
    }
}

/// Builds `Σ_j c_j S_j â_j† b̂_j† |0⟩` with `c_j ∝ amplitude_j √brightness_j e^{-iφ_j}`.
///
/// With equal pump amplitudes and identical channels this is the balanced
/// `1/√N` state. Channel pairs with lower transmission contribute
/// proportionally fewer pairs.
pub fn build_state(
    jsas: Vec<JointSpectralAmplitude>,
    phases: &[f64],
    amplitudes: &[f64],
) -> Result<PathState, StateError> {
    let n = jsas.len();
    if n == 0 {
        return Err(StateError::Empty);
    }
    for len in [phases.len(), amplitudes.len()] {
        if len != n {
            return Err(StateError::LengthMismatch {
                expected: n,
                got: len,
            });
        }
    }
    if amplitudes.iter().any(|&a| !(a >= 0.0) || !a.is_finite()) {
        return Err(StateError::Normalization);
    }
    let raw: Vec<Complex64> = jsas
        .iter()
        .zip(phases)
        .zip(amplitudes)
        .map(|((s, &phi), &a)| Complex64::from_polar(a * s.brightness().sqrt(), -phi))
        .collect();
    let norm = raw.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    if !(norm > 0.0) {
        return Err(StateError::Normalization);
    }
    Ok(PathState {
        coefficients: raw.into_iter().map(|c| c / norm).collect(),
        jsas,
    })
}

/// Interferometer phases of the signal and idler projections. `phi_s`,
/// `phi_i` are the phases entering the state projection; the pump-derived
/// phases are `φ_A = φ_s + offset_s` and `φ_B = φ_i + offset_i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProjectionSetting {
    pub phi_s: f64,
    pub phi_i: f64,
    pub offset_s: f64,
    pub offset_i: f64,
}

impl ProjectionSetting {
    pub fn new(phi_s: f64, phi_i: f64) -> Self {
        Self::with_offsets(phi_s, phi_i, 0.0, 0.0)
    }

    pub fn with_offsets(phi_s: f64, phi_i: f64, offset_s: f64, offset_i: f64) -> Self {
        Self {
            phi_s: wrap_tau(phi_s),
            phi_i: wrap_tau(phi_i),
            offset_s: wrap_tau(offset_s),
            offset_i: wrap_tau(offset_i),
        }
    }

    pub fn phi_a(&self) -> f64 {
        wrap_tau(self.phi_s + self.offset_s)
    }

    pub fn phi_b(&self) -> f64 {
        wrap_tau(self.phi_i + self.offset_i)
    }
}

/// Coincidence probability at one output port of each projection coupler,
/// as a direct sum over the joint spectral cells.
pub fn coincidence_probability(
    state: &PathState,
    setting: &ProjectionSetting,
) -> Result<f64, StateError> {
    state.require_pair()?;
    let phase = Complex64::from_polar(1.0, setting.phi_s + setting.phi_i);
    let (c1, c2) = (state.coefficients[0], state.coefficients[1]);
    let mut total = 0.0;
    merge_cells(state.jsas[0].cells(), state.jsas[1].cells(), |a, b| {
        total += ((phase * c1 * a + c2 * b) * 0.5).norm_sqr();
    });
    Ok(total * state.jsas[0].cell_area())
}

/// Spectral-overlap visibility
/// `V = 2∫Re[f₁(ν) g₁(2ν_p−ν) f₂(ν) g₂(2ν_p−ν)] dν / ∫(|f₁g₁|² + |f₂g₂|²) dν`
/// by the trapezoidal rule on the signal grid. Idler spectra are interpolated
/// at the mirrored frequency. `pump_frequency` is ν_p in Hz; the ratio is
/// unchanged by the ν → ω rescaling.
pub fn visibility_from_spectra(
    f1: &TransmissionSpectrum,
    g1: &TransmissionSpectrum,
    f2: &TransmissionSpectrum,
    g2: &TransmissionSpectrum,
    pump_frequency: f64,
) -> Result<f64, StateError> {
    if !f1.grid.matches(&f2.grid) || !g1.grid.matches(&g2.grid) {
        return Err(StateError::GridMismatch);
    }
    let sum = 2.0 * pump_frequency;
    let n = f1.grid.len();
    let mut numerator = Vec::with_capacity(n);
    let mut denominator = Vec::with_capacity(n);
    for (i, nu) in f1.grid.iter().enumerate() {
        let p1 = f1.amplitude[i] * g1.amplitude_at(sum - nu);
        let p2 = f2.amplitude[i] * g2.amplitude_at(sum - nu);
        numerator.push(2.0 * (p1 * p2).re);
        denominator.push(p1.norm_sqr() + p2.norm_sqr());
    }
    let den = numeric::trapezoid(&denominator, f1.grid.step);
    if !(den > 0.0) {
        return Err(StateError::UndefinedVisibility);
    }
    Ok(numeric::trapezoid(&numerator, f1.grid.step) / den)
}

/// `(C0, V, Δφ)` of the fringe in `φ_A + φ_B`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FringeParameters {
    pub c0: f64,
    pub visibility: f64,
    pub delta_phi: f64,
}

/// JSON visibility report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VisibilityReport {
    pub v: f64,
    pub c0: f64,
    pub delta_phi_rad: f64,
    pub method: String,
}

/// Least-squares fringe extraction from noiseless `coincidence_probability`
/// evaluations over a sweep of settings.
///
/// The sweep must cover the full period of `φ_A + φ_B`: at least four
/// distinct sum phases and no gap wider than a quarter period.
pub fn fringe_model_parameters(
    state: &PathState,
    settings: &[ProjectionSetting],
) -> Result<FringeParameters, StateError> {
    state.require_pair()?;
    let xs: Vec<f64> = settings.iter().map(|s| s.phi_a() + s.phi_b()).collect();
    let mut distinct: Vec<f64> = xs.iter().map(|&x| wrap_tau(x)).collect();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    let gap = max_circular_gap(&xs);
    if distinct.len() < 4 || gap > FRAC_PI_2 {
        return Err(StateError::IllConditioned(format!(
            "{} distinct sum phases, largest gap {:.1} deg",
            distinct.len(),
            gap.to_degrees()
        )));
    }
    let ys = settings
        .iter()
        .map(|s| coincidence_probability(state, s))
        .collect::<Result<Vec<_>, _>>()?;
    let fit = SinusoidFit::weighted(&xs, &ys, &vec![1.0; xs.len()])
        .ok_or_else(|| StateError::IllConditioned("singular normal equations".into()))?;
    Ok(FringeParameters {
        c0: fit.c0,
        visibility: fit.visibility,
        delta_phi: fit.delta_phi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::awg::{plan_ports, port_transmission, Arm, AwgDesign, PassbandModel, PortOffset};
    use crate::pair_source::{build_jsa_quasi_cw, PumpSpec};
    use std::f64::consts::TAU;

    fn jsas(n: usize, offsets: Vec<PortOffset>) -> Vec<JointSpectralAmplitude> {
        let d = AwgDesign::paper();
        let p = plan_ports(&d, n, n.max(3) as u32).unwrap();
        let pb = PassbandModel::gaussian(90e9).with_offsets(offsets);
        let pump = PumpSpec::paper(d.center_frequency());
        (0..n)
            .map(|j| {
                let f = port_transmission(&d, &p, j, Arm::Signal, &pb).unwrap();
                let g = port_transmission(&d, &p, j, Arm::Idler, &pb).unwrap();
                build_jsa_quasi_cw(&f, &g, &pump).unwrap()
            })
            .collect()
    }

    fn sweep(n: usize) -> Vec<ProjectionSetting> {
        (0..n)
            .map(|k| ProjectionSetting::new(k as f64 * TAU / n as f64, 0.0))
            .collect()
    }

    #[test]
    fn balanced_two_mode_coefficients() {
        let s = build_state(jsas(2, vec![]), &[0.0, 0.0], &[1.0, 1.0]).unwrap();
        for c in s.coefficients() {
            assert!((c.re - 0.5f64.sqrt()).abs() < 1e-12 && c.im.abs() < 1e-12);
        }
    }

    #[test]
    fn three_mode_equal_weights() {
        let s = build_state(jsas(3, vec![]), &[0.0, 1.0, 2.0], &[1.0; 3]).unwrap();
        for c in s.coefficients() {
            assert!((c.norm_sqr() - 1.0 / 3.0).abs() < 1e-12);
        }
        let total: f64 = s.coefficients().iter().map(|c| c.norm_sqr()).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn product_state_flagged() {
        let s = build_state(jsas(2, vec![]), &[0.0, 0.0], &[1.0, 0.0]).unwrap();
        assert!(s.is_separable());
        assert!(matches!(
            build_state(jsas(2, vec![]), &[0.0, 0.0], &[0.0, 0.0]),
            Err(StateError::Normalization)
        ));
        assert!(matches!(
            build_state(jsas(2, vec![]), &[0.0], &[1.0, 1.0]),
            Err(StateError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn identical_channels_interfere_fully() {
        let s = build_state(jsas(2, vec![]), &[0.0, 0.0], &[1.0, 1.0]).unwrap();
        let top = coincidence_probability(&s, &ProjectionSetting::new(0.0, 0.0)).unwrap();
        let bottom = coincidence_probability(&s, &ProjectionSetting::new(PI, 0.0)).unwrap();
        assert!((top - 0.5).abs() < 1e-9, "{top}");
        assert!(bottom.abs() < 1e-12, "{bottom}");
    }

    #[test]
    fn depends_only_on_phase_sum() {
        let s = build_state(
            jsas(
                2,
                vec![
                    PortOffset::default(),
                    PortOffset {
                        signal: 6e9,
                        idler: 1e9,
                    },
                ],
            ),
            &[0.3, 1.1],
            &[1.0, 0.8],
        )
        .unwrap();
        for chi in [0.1, 1.0, 2.5, -0.7] {
            let a = coincidence_probability(&s, &ProjectionSetting::new(0.4, 0.9)).unwrap();
            let b = coincidence_probability(&s, &ProjectionSetting::new(0.4 + chi, 0.9 - chi))
                .unwrap();
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn profile_matches_direct_sum() {
        let s = build_state(
            jsas(
                2,
                vec![PortOffset {
                    signal: -4e9,
                    idler: 9e9,
                }],
            ),
            &[0.0, 0.7],
            &[1.0, 1.0],
        )
        .unwrap();
        let profile = s.fringe_profile().unwrap();
        for k in 0..12 {
            let x = k as f64 * 0.5;
            let direct = coincidence_probability(&s, &ProjectionSetting::new(x, 0.0)).unwrap();
            assert!((direct - profile.probability(x)).abs() < 1e-12);
        }
    }

    #[test]
    fn identical_channels_fringe_convention() {
        let s = build_state(jsas(2, vec![]), &[0.0, 0.0], &[1.0, 1.0]).unwrap();
        let p = fringe_model_parameters(&s, &sweep(24)).unwrap();
        assert!((p.visibility - 1.0).abs() < 1e-9);
        assert!((p.delta_phi - PI).abs() < 1e-9);
    }

    #[test]
    fn imbalanced_amplitudes_reduce_visibility() {
        let s = build_state(jsas(2, vec![]), &[0.0, 0.0], &[0.6f64.sqrt(), 0.4f64.sqrt()])
            .unwrap();
        let p = fringe_model_parameters(&s, &sweep(24)).unwrap();
        assert!((p.visibility - 2.0 * (0.24f64).sqrt()).abs() < 1e-9);
        assert!((p.visibility - 0.9798).abs() < 1e-4);
    }

    #[test]
    fn narrow_sweep_is_ill_conditioned() {
        let s = build_state(jsas(2, vec![]), &[0.0, 0.0], &[1.0, 1.0]).unwrap();
        let narrow: Vec<_> = (0..10)
            .map(|k| ProjectionSetting::new(k as f64 * 0.3, 0.0))
            .collect();
        assert!(matches!(
            fringe_model_parameters(&s, &narrow),
            Err(StateError::IllConditioned(_))
        ));
    }

    #[test]
    fn three_modes_cannot_be_projected() {
        let s = build_state(jsas(3, vec![]), &[0.0; 3], &[1.0; 3]).unwrap();
        assert_eq!(
            coincidence_probability(&s, &ProjectionSetting::new(0.0, 0.0)),
            Err(StateError::NeedsTwoModes(3))
        );
    }
}
