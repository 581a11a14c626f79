use super::SimError;
use serde::{Deserialize, Serialize};

/// Gated InGaAs single-photon detector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorSpec {
    pub efficiency: f64,
    /// Seconds.
    pub gate_width: f64,
    /// Hz.
    pub dark_count_rate: f64,
    /// Seconds.
    pub dead_time: f64,
    /// Hz.
    pub gate_rate: f64,
    /// Flat background click probability per gate (residual pump leakage).
    pub background_per_gate: f64,
}

impl DetectorSpec {
    pub fn paper() -> Self {
        Self {
            efficiency: 0.21,
            gate_width: 1.0e-9,
            dark_count_rate: 2.1e3,
            dead_time: 10e-6,
            gate_rate: 100e6,
            background_per_gate: 0.0,
        }
    }

    pub fn dark_probability(&self) -> f64 {
        self.dark_count_rate * self.gate_width
    }

    /// Gates blanked after each click, `⌈dead_time · gate_rate⌉`.
    pub fn blanking_gates(&self) -> u64 {
        let gates = self.dead_time * self.gate_rate;
        // tolerate rounding in products such as 10e-6 * 100e6
        (gates - 1e-9).ceil().max(0.0) as u64
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::InvalidParameter(m));
        if !(self.efficiency > 0.0 && self.efficiency <= 1.0) {
            return bad(format!("detector efficiency must lie in (0, 1], got {}", self.efficiency));
        }
        if !(self.dead_time >= 0.0) {
            return bad(format!("dead time must be >= 0, got {}", self.dead_time));
        }
        if !(self.gate_rate > 0.0 && self.gate_width > 0.0) {
            return bad("gate rate and width must be positive".into());
        }
        if !(self.dark_count_rate >= 0.0) {
            return bad(format!("dark count rate must be >= 0, got {}", self.dark_count_rate));
        }
        if !(self.dark_probability() < 1.0) {
            return bad(format!("dark probability per gate {} must be < 1", self.dark_probability()));
        }
        if !(0.0..1.0).contains(&self.background_per_gate) {
            return bad(format!("background per gate must lie in [0, 1), got {}", self.background_per_gate));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossItem {
    pub name: String,
    pub db: f64,
}

/// Per-mode collection loss, excluding detector efficiency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossBudget {
    pub collection_db: f64,
    pub components: Vec<LossItem>,
}

impl LossBudget {
    pub fn paper() -> Self {
        let item = |name: &str, db| LossItem {
            name: name.into(),
            db,
        };
        Self {
            collection_db: -17.5,
            components: vec![
                item("facet coupling", -1.0),
                item("awg", -6.7),
                item("spectral filters", -2.8),
                item("other fiber components", -7.0),
            ],
        }
    }

    pub fn itemized_db(&self) -> f64 {
        self.components.iter().map(|c| c.db).sum()
    }

    pub fn transmission(&self) -> f64 {
        crate::db_to_intensity(self.collection_db)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if let Some(c) = self.components.iter().find(|c| !(c.db <= 0.0)) {
            return Err(SimError::InvalidParameter(format!(
                "loss item '{}' must be <= 0 dB, got {}",
                c.name, c.db
            )));
        }
        if !(self.collection_db <= 0.0) {
            return Err(SimError::InvalidParameter(format!(
                "collection loss must be <= 0 dB, got {}",
                self.collection_db
            )));
        }
        if !self.components.is_empty() && (self.itemized_db() - self.collection_db).abs() > 0.3 {
            return Err(SimError::InvalidParameter(format!(
                "itemized losses sum to {:.2} dB but collection is {:.2} dB",
                self.itemized_db(),
                self.collection_db
            )));
        }
        Ok(())
    }
}

/// First-order click probabilities for one gate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GateProbabilities {
    /// Mean pairs per gate feeding the interferometers.
    pub mu: f64,
    /// Per-photon detection probability including detector efficiency.
    pub transmission: f64,
    pub p_single_s: f64,
    pub p_single_i: f64,
    /// Phase-averaged genuine coincidence probability `μ t_s t_i`.
    pub p_true_coinc: f64,
    pub p_dark: f64,
}

/// Per-gate singles and coincidence probabilities for `mu` pairs per gate,
/// identical loss budgets on both arms and no dead time.
pub fn per_gate_probabilities(
    mu: f64,
    losses: &LossBudget,
    det: &DetectorSpec,
) -> Result<GateProbabilities, SimError> {
    det.validate()?;
    losses.validate()?;
    if !(0.0..0.5).contains(&mu) {
        return Err(SimError::InvalidParameter(format!(
            "mean pairs per gate must lie in [0, 0.5), got {mu}"
        )));
    }
    let transmission = losses.transmission() * det.efficiency;
    let p_dark = det.dark_probability();
    let p_single = mu * transmission + p_dark + det.background_per_gate;
    let p_true_coinc = mu * transmission * transmission;
    if !(p_single <= 1.0) {
        return Err(SimError::InvalidParameter(format!(
            "singles probability {p_single} exceeds 1"
        )));
    }
    Ok(GateProbabilities {
        mu,
        transmission,
        p_single_s: p_single,
        p_single_i: p_single,
        p_true_coinc,
        p_dark,
    })
}

/// Accidental coincidence probability of two independent gated streams.
pub fn accidental_probability(p_single_s: f64, p_single_i: f64) -> f64 {
    p_single_s * p_single_i
}

/// Steady-state fraction of gates a detector is live when each click blanks
/// `blanking` following gates.
pub fn live_fraction(p_click: f64, blanking: u64) -> f64 {
    1.0 / (1.0 + blanking as f64 * p_click)
}
