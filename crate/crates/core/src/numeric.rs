//! Small numerical helpers shared across modules: uniform frequency grids,
//! trapezoidal quadrature, width measurement and a linear sinusoid fit.

use nalgebra::{Matrix3, Vector3};
use std::f64::consts::{PI, TAU};

/// Uniform grid `center + k * step` for `k` in `-half_points..=half_points`.
///
/// Grids are anchored on their center so that two grids mirrored about the
/// pump frequency line up node for node.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FrequencyGrid {
    pub center: f64,
    pub step: f64,
    pub half_points: usize,
}

impl FrequencyGrid {
    pub fn new(center: f64, step: f64, half_points: usize) -> Self {
        Self {
            center,
            step,
            half_points,
        }
    }

    /// Smallest centered grid with resolution `step` covering `center ± half_span`.
    pub fn spanning(center: f64, half_span: f64, step: f64) -> Self {
        let half_points = (half_span / step).ceil() as usize;
        Self::new(center, step, half_points)
    }

    pub fn len(&self) -> usize {
        2 * self.half_points + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn value(&self, index: usize) -> f64 {
        self.center + (index as f64 - self.half_points as f64) * self.step
    }

    pub fn first(&self) -> f64 {
        self.value(0)
    }

    pub fn last(&self) -> f64 {
        self.value(self.len() - 1)
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(move |i| self.value(i))
    }

    /// Fractional index of `freq`; may be outside `0..len`.
    pub fn position(&self, freq: f64) -> f64 {
        (freq - self.center) / self.step + self.half_points as f64
    }

    /// Grids are considered identical when nodes agree to a tiny fraction of a step.
    pub fn matches(&self, other: &FrequencyGrid) -> bool {
        self.half_points == other.half_points
            && ((self.step - other.step) / self.step).abs() < 1e-12
            && ((self.center - other.center) / self.step).abs() < 1e-6
    }
}

/// Trapezoidal rule for uniformly spaced samples.
pub fn trapezoid(values: &[f64], step: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => {
            let inner: f64 = values[1..n - 1].iter().sum();
            step * (inner + 0.5 * (values[0] + values[n - 1]))
        }
    }
}

/// Full width at half maximum of a sampled single-peaked profile, using
/// linear interpolation between the samples that straddle half maximum.
///
/// Returns `None` if the profile does not fall below half maximum on both sides.
pub fn fwhm(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let (peak_idx, &peak) = ys
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))?;
    if peak <= 0.0 {
        return None;
    }
    let half = 0.5 * peak;
    let left = (1..=peak_idx).rev().find(|&i| ys[i - 1] < half)?;
    let right = (peak_idx..ys.len() - 1).find(|&i| ys[i + 1] < half)?;
    let cross = |i: usize, j: usize| xs[i] + (half - ys[i]) * (xs[j] - xs[i]) / (ys[j] - ys[i]);
    Some(cross(right, right + 1) - cross(left - 1, left))
}

/// Wraps an angle into `[0, 2π)`.
pub fn wrap_tau(angle: f64) -> f64 {
    let a = angle.rem_euclid(TAU);
    if a >= TAU {
        0.0
    } else {
        a
    }
}

/// Signed circular difference `a - b` folded into `(-π, π]`.
pub fn circular_diff(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    if d > PI {
        d - TAU
    } else {
        d
    }
}

/// Largest gap between consecutive angles on the circle. A single sample
/// leaves a gap of a full turn.
pub fn max_circular_gap(angles: &[f64]) -> f64 {
    if angles.is_empty() {
        return TAU;
    }
    let mut wrapped: Vec<f64> = angles.iter().map(|&a| wrap_tau(a)).collect();
    wrapped.sort_by(f64::total_cmp);
    let mut gap = wrapped[0] + TAU - wrapped[wrapped.len() - 1];
    for w in wrapped.windows(2) {
        gap = gap.max(w[1] - w[0]);
    }
    gap
}

/// Weighted linear least-squares fit of `y = a + b cos x + d sin x`,
/// reported in the fringe form `y = c0 (1 - v cos(x + delta_phi))`.
#[derive(Debug, Clone, Copy)]
pub struct SinusoidFit {
    pub c0: f64,
    pub visibility: f64,
    pub delta_phi: f64,
    /// Covariance of `(c0, visibility, delta_phi)` assuming the weights are
    /// inverse variances.
    pub covariance: Matrix3<f64>,
    pub chi_square: f64,
    /// Raw linear coefficients `(a, b, d)`.
    pub linear: Vector3<f64>,
}

impl SinusoidFit {
    /// Returns `None` when the normal equations are singular.
    pub fn weighted(xs: &[f64], ys: &[f64], weights: &[f64]) -> Option<Self> {
        let mut normal = Matrix3::zeros();
        let mut rhs = Vector3::zeros();
        for ((&x, &y), &w) in xs.iter().zip(ys).zip(weights) {
            let row = Vector3::new(1.0, x.cos(), x.sin());
            normal += w * row * row.transpose();
            rhs += w * y * row;
        }
        let inverse = normal.try_inverse()?;
        let linear = inverse * rhs;
        let (a, b, d) = (linear[0], linear[1], linear[2]);
        let r2 = b * b + d * d;
        let r = r2.sqrt();
        if a == 0.0 {
            return None;
        }
        let visibility = r / a;
        let delta_phi = wrap_tau(d.atan2(-b));

        // Jacobian of (c0, v, delta_phi) with respect to (a, b, d).
        let mut jac = Matrix3::zeros();
        jac[(0, 0)] = 1.0;
        jac[(1, 0)] = -visibility / a;
        if r > 0.0 {
            jac[(1, 1)] = b / (a * r);
            jac[(1, 2)] = d / (a * r);
            jac[(2, 1)] = d / r2;
            jac[(2, 2)] = -b / r2;
        }
        let covariance = jac * inverse * jac.transpose();

        let chi_square = xs
            .iter()
            .zip(ys)
            .zip(weights)
            .map(|((&x, &y), &w)| {
                let model = a + b * x.cos() + d * x.sin();
                w * (y - model).powi(2)
            })
            .sum();

        Some(Self {
            c0: a,
            visibility,
            delta_phi,
            covariance,
            chi_square,
            linear,
        })
    }

    pub fn c0_sigma(&self) -> f64 {
        self.covariance[(0, 0)].max(0.0).sqrt()
    }

    pub fn visibility_sigma(&self) -> f64 {
        self.covariance[(1, 1)].max(0.0).sqrt()
    }

    pub fn delta_phi_sigma(&self) -> f64 {
        self.covariance[(2, 2)].max(0.0).sqrt()
    }

    pub fn evaluate(&self, x: f64) -> f64 {
        self.c0 * (1.0 - self.visibility * (x + self.delta_phi).cos())
    }

    /// Derivative of the fitted fringe with respect to its phase argument.
    pub fn slope(&self, x: f64) -> f64 {
        self.c0 * self.visibility * (x + self.delta_phi).sin()
    }
}
