use super::detector::{live_fraction, DetectorSpec, GateProbabilities};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Gate-by-gate detection model for one pair of detectors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GateModel {
    pub mu: f64,
    pub transmission_s: f64,
    pub transmission_i: f64,
    /// Ratio of the joint detection probability of one pair to `t_s t_i`.
    pub fringe_factor: f64,
    /// Per-gate click probability from darks and background.
    pub background_s: f64,
    pub background_i: f64,
    pub blanking_gates: u64,
}

impl GateModel {
    pub fn new(probs: &GateProbabilities, det: &DetectorSpec, fringe_factor: f64) -> Self {
        let background = probs.p_dark + det.background_per_gate;
        Self {
            mu: probs.mu,
            transmission_s: probs.transmission,
            transmission_i: probs.transmission,
            fringe_factor,
            background_s: background,
            background_i: background,
            blanking_gates: det.blanking_gates(),
        }
    }

    /// First-order expectations per gate, dead time included through the
    /// live fraction of each detector.
    pub fn expected(&self) -> GateExpectation {
        let p_s = self.mu * self.transmission_s + self.background_s;
        let p_i = self.mu * self.transmission_i + self.background_i;
        let live_s = live_fraction(p_s, self.blanking_gates);
        let live_i = live_fraction(p_i, self.blanking_gates);
        let true_coinc = self.mu * self.transmission_s * self.transmission_i * self.fringe_factor;
        GateExpectation {
            singles_s: p_s * live_s,
            singles_i: p_i * live_i,
            coincidences: (true_coinc + p_s * p_i) * live_s * live_i,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GateExpectation {
    pub singles_s: f64,
    pub singles_i: f64,
    pub coincidences: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct GateCounts {
    pub gates: u64,
    pub singles_s: u64,
    pub singles_i: u64,
    pub coincidences: u64,
}

/// Walks `gates` detector gates, drawing Poisson pair numbers, per-photon
/// losses, background clicks and dead-time blanking.
pub fn simulate_gates(model: &GateModel, gates: u64, seed: u64) -> GateCounts {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pair_cdf = poisson_cdf(model.mu);
    let both = (model.transmission_s * model.transmission_i * model.fringe_factor)
        .min(model.transmission_s)
        .min(model.transmission_i);
    let s_only = model.transmission_s;
    let i_only = model.transmission_s + model.transmission_i - both;

    let mut counts = GateCounts {
        gates,
        singles_s: 0,
        singles_i: 0,
        coincidences: 0,
    };
    let (mut dead_s, mut dead_i) = (0u64, 0u64);
    for gate in 0..gates {
        let u: f64 = rng.random();
        let pairs = pair_cdf.iter().position(|&c| u < c).unwrap_or(pair_cdf.len());
        let mut click_s = rng.random::<f64>() < model.background_s;
        let mut click_i = rng.random::<f64>() < model.background_i;
        for _ in 0..pairs {
            let v: f64 = rng.random();
            if v < both {
                click_s = true;
                click_i = true;
            } else if v < s_only {
                click_s = true;
            } else if v < i_only {
                click_i = true;
            }
        }
        let seen_s = click_s && gate >= dead_s;
        let seen_i = click_i && gate >= dead_i;
        if seen_s {
            counts.singles_s += 1;
            dead_s = gate + 1 + model.blanking_gates;
        }
        if seen_i {
            counts.singles_i += 1;
            dead_i = gate + 1 + model.blanking_gates;
        }
        if seen_s && seen_i {
            counts.coincidences += 1;
        }
    }
    counts
}

/// Cumulative Poisson probabilities up to where the tail is negligible.
fn poisson_cdf(mu: f64) -> Vec<f64> {
    let mut cdf = Vec::new();
    let mut term = (-mu).exp();
    let mut total = 0.0;
    for k in 0..64 {
        total += term;
        cdf.push(total);
        if 1.0 - total < 1e-15 {
            break;
        }
        term *= mu / (k + 1) as f64;
    }
    cdf
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn poisson_cdf_sums_to_one() {
        let cdf = poisson_cdf(0.3);
        assert!((cdf.last().unwrap() - 1.0).abs() < 1e-14);
        assert!((cdf[0] - (-0.3f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn deterministic_replay() {
        let m = GateModel {
            mu: 0.05,
            transmission_s: 0.1,
            transmission_i: 0.1,
            fringe_factor: 1.0,
            background_s: 1e-4,
            background_i: 1e-4,
            blanking_gates: 10,
        };
        assert_eq!(simulate_gates(&m, 100_000, 4), simulate_gates(&m, 100_000, 4));
    }
}
