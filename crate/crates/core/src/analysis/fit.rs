use super::map::CoincidenceMap;
use super::AnalysisError;
use crate::numeric::{max_circular_gap, SinusoidFit};
use serde::Serialize;
use std::f64::consts::FRAC_PI_2;

const MAX_ITERATIONS: usize = 10;
const TOLERANCE: f64 = 1e-8;

/// Fringe `C(φ_A, φ_B) = c0 (1 − v cos(φ_A + φ_B + Δφ))`, rates in Hz.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    pub c0: f64,
    pub c0_sigma: f64,
    pub v: f64,
    pub v_sigma: f64,
    /// Radians in `[0, 2π)`.
    pub delta_phi: f64,
    pub delta_phi_sigma: f64,
    pub chi_square: f64,
    pub dof: usize,
    pub iterations: usize,
    pub accidentals_subtracted: bool,
    /// Visibility outside `[0, 1.05]`.
    pub out_of_range: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SliceResult {
    pub phi_a_deg: f64,
    pub bins: usize,
    pub fit: FitResult,
}

struct Point {
    x: f64,
    y: f64,
    var_y: f64,
    var_x: f64,
    exposure: f64,
    /// Count variance beyond the Poisson term of the bin itself.
    excess: f64,
}

impl Point {
    /// Count-rate variance with the Poisson term taken from the model
    /// rather than the observed counts, which would bias the fit low.
    fn model_var_y(&self, rate: f64) -> f64 {
        let counts = rate.max(0.0) * self.exposure + self.excess;
        counts.max(1.0) / (self.exposure * self.exposure)
    }
}

/// Weighted fit over every exposed bin with effective variance
/// `σ_C² + (∂C/∂φ_A)² σ_A² + (∂C/∂φ_B)² σ_B²`, reweighted until the
/// parameters settle.
pub fn fit_fringe(map: &CoincidenceMap) -> Result<FitResult, AnalysisError> {
    let n = map.axis_len();
    let points: Vec<Point> = (0..n)
        .flat_map(|a| (0..n).map(move |b| (a, b)))
        .filter_map(|(a, b)| point(map, a, b))
        .collect();
    if points.is_empty() {
        return Err(AnalysisError::NoData);
    }
    let gap = max_circular_gap(&points.iter().map(|p| p.x).collect::<Vec<_>>());
    if gap > FRAC_PI_2 + 1e-9 {
        return Err(AnalysisError::Coverage(format!(
            "sum phase φ_A + φ_B leaves a {:.1} deg gap",
            gap.to_degrees()
        )));
    }
    irls(&points, map.accidentals_subtracted)
}

/// Fits the row of bins containing `phi_a_deg`.
pub fn slice_fringe(map: &CoincidenceMap, phi_a_deg: f64) -> Result<SliceResult, AnalysisError> {
    const NEEDED: usize = 6;
    let a = map.layout.index(phi_a_deg.to_radians());
    let points: Vec<Point> = (0..map.axis_len()).filter_map(|b| point(map, a, b)).collect();
    let center = map.layout.center(a).to_degrees();
    if points.len() < NEEDED {
        return Err(AnalysisError::InsufficientData {
            phi_a_deg: center,
            found: points.len(),
            needed: NEEDED,
        });
    }
    Ok(SliceResult {
        phi_a_deg: center,
        bins: points.len(),
        fit: irls(&points, map.accidentals_subtracted)?,
    })
}

fn point(map: &CoincidenceMap, a: usize, b: usize) -> Option<Point> {
    let (y, sigma) = map.rate(a, b)?;
    let (sa, sb) = map.phase_sigma(a, b);
    let bin = map.bin(a, b);
    Some(Point {
        x: map.layout.center(a) + map.layout.center(b),
        y,
        var_y: sigma * sigma,
        var_x: sa * sa + sb * sb,
        exposure: map.exposure_seconds(a, b),
        excess: (bin.variance - bin.coincidences).max(0.0),
    })
}

fn irls(points: &[Point], subtracted: bool) -> Result<FitResult, AnalysisError> {
    let xs: Vec<f64> = points.iter().map(|p| p.x).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.y).collect();
    let mut weights: Vec<f64> = points.iter().map(|p| 1.0 / p.var_y).collect();
    let mut fit = SinusoidFit::weighted(&xs, &ys, &weights).ok_or(AnalysisError::Singular)?;
    for iteration in 1..=MAX_ITERATIONS {
        for (w, p) in weights.iter_mut().zip(points) {
            *w = 1.0 / (p.model_var_y(fit.evaluate(p.x)) + fit.slope(p.x).powi(2) * p.var_x);
        }
        let next = SinusoidFit::weighted(&xs, &ys, &weights).ok_or(AnalysisError::Singular)?;
        let change = (next.linear - fit.linear).norm();
        let scale = next.linear.norm();
        fit = next;
        if change <= TOLERANCE * scale {
            return Ok(result(&fit, points.len(), iteration, subtracted));
        }
    }
    Err(AnalysisError::NoConvergence(Box::new(result(
        &fit,
        points.len(),
        MAX_ITERATIONS,
        subtracted,
    ))))
}

fn result(fit: &SinusoidFit, n: usize, iterations: usize, subtracted: bool) -> FitResult {
    FitResult {
        c0: fit.c0,
        c0_sigma: fit.c0_sigma(),
        v: fit.visibility,
        v_sigma: fit.visibility_sigma(),
        delta_phi: fit.delta_phi,
        delta_phi_sigma: fit.delta_phi_sigma(),
        chi_square: fit.chi_square,
        dof: n.saturating_sub(3),
        iterations,
        accidentals_subtracted: subtracted,
        out_of_range: !(0.0..=1.05).contains(&fit.visibility),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{BinLayout, MapBin};

    fn fringe_map(layout: BinLayout, c0: f64, v: f64, dphi: f64) -> CoincidenceMap {
        CoincidenceMap::from_fn(layout, 1.0, 1, |a, b| {
            let c = c0 * (1.0 - v * (a + b + dphi).cos());
            MapBin {
                coincidences: c,
                accidentals: 0.0,
                records: 1,
                variance: c,
            }
        })
    }

    #[test]
    fn noiseless_fixed_point() {
        let map = fringe_map(BinLayout::default(), 100.0, 0.8, 30f64.to_radians());
        let fit = fit_fringe(&map).unwrap();
        assert!((fit.c0 - 100.0).abs() < 1e-6);
        assert!((fit.v - 0.8).abs() < 1e-6);
        assert!((fit.delta_phi.to_degrees() - 30.0).abs() < 1e-6);
        assert!(!fit.out_of_range);
    }

    #[test]
    fn slices_of_noiseless_map() {
        let map = fringe_map(BinLayout::default(), 50.0, 0.8, 1.0);
        for phi in [51.0, 141.0, 0.0, 200.0] {
            let s = slice_fringe(&map, phi).unwrap();
            assert!((s.fit.v - 0.8).abs() < 1e-9, "{phi}: {}", s.fit.v);
        }
    }

    #[test]
    fn sparse_slice_rejected() {
        let mut map = fringe_map(BinLayout::default(), 50.0, 0.8, 1.0);
        map = CoincidenceMap::from_fn(map.layout, 1.0, 1, |a, b| {
            let keep = b < 0.5;
            MapBin {
                coincidences: 10.0,
                accidentals: 0.0,
                records: keep as u64,
                variance: 10.0 * (a + 1.0),
            }
        });
        assert!(matches!(
            slice_fringe(&map, 51.0),
            Err(AnalysisError::InsufficientData { .. })
        ));
    }
}
