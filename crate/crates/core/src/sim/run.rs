use super::detector::{live_fraction, per_gate_probabilities, DetectorSpec, LossBudget};
use super::drift::DriftModel;
use super::retrieval::PhaseRetrieval;
use super::SimError;
use crate::numeric::{circular_diff, wrap_tau};
use crate::state::FringeProfile;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use rayon::prelude::*;
use serde::Serialize;

/// Everything the record-level simulator needs about the physical setup.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    /// Coincidence fringe of the path-entangled state in `φ_s + φ_i`.
    pub fringe: FringeProfile,
    /// Multiplies the fringe modulation; models polarization drift.
    pub polarization_factor: f64,
    /// Mean pairs per gate summed over all sources.
    pub pair_probability: f64,
    pub losses: LossBudget,
    pub detector: DetectorSpec,
    /// `φ_A − φ_s`, radians.
    pub offset_a: f64,
    /// `φ_B − φ_i`, radians.
    pub offset_b: f64,
    pub initial_phase_a: f64,
    pub initial_phase_b: f64,
    pub retrieval: PhaseRetrieval,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSpec {
    /// Seconds.
    pub duration: f64,
    pub seed: u64,
    /// Records per independently seeded segment.
    pub segment_records: usize,
    pub parallel: bool,
}

impl RunSpec {
    pub fn new(duration: f64, seed: u64) -> Self {
        Self {
            duration,
            seed,
            segment_records: 1000,
            parallel: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoincidenceRecord {
    /// End of the record, seconds from run start.
    pub timestamp: f64,
    pub phi_a_est: f64,
    pub phi_b_est: f64,
    pub bin_size_a: f64,
    pub bin_size_b: f64,
    pub singles_1: u64,
    pub singles_2: u64,
    pub coincidences: u64,
    pub accidental_estimate: f64,
    pub discarded: bool,
}

pub fn record_count(duration: f64, record_interval: f64) -> usize {
    (duration / record_interval + 1e-9).floor() as usize
}

/// Rates shared by every record.
struct Rates {
    gates: u64,
    p_true: f64,
    p_single: f64,
    live: f64,
    fringe_scale: Complex64,
}

pub fn simulate_run(
    exp: &ExperimentSpec,
    drift: &DriftModel,
    run: &RunSpec,
) -> Result<Vec<CoincidenceRecord>, SimError> {
    drift.validate()?;
    if !(run.duration >= drift.record_interval) {
        return Err(SimError::InvalidParameter(format!(
            "duration {} s is shorter than one record interval",
            run.duration
        )));
    }
    if run.segment_records == 0 {
        return Err(SimError::InvalidParameter("segment_records must be > 0".into()));
    }
    if !(0.0..=1.0).contains(&exp.polarization_factor) {
        return Err(SimError::InvalidParameter(format!(
            "polarization factor must lie in [0, 1], got {}",
            exp.polarization_factor
        )));
    }
    if !(exp.fringe.mean > 0.0) {
        return Err(SimError::InvalidParameter("fringe has no coincidence probability".into()));
    }
    let probs = per_gate_probabilities(exp.pair_probability, &exp.losses, &exp.detector)?;
    let rates = Rates {
        gates: (drift.record_interval * exp.detector.gate_rate).round() as u64,
        p_true: probs.p_true_coinc,
        p_single: probs.p_single_s,
        live: live_fraction(probs.p_single_s, exp.detector.blanking_gates()),
        fringe_scale: exp.fringe.modulation / exp.fringe.mean
            * exp.polarization_factor
            * (-drift.fast_noise_std.powi(2)).exp(),
    };

    let n = record_count(run.duration, drift.record_interval);
    let n_segments = n.div_ceil(run.segment_records);
    let step = Normal::new(0.0, drift.step_std).map_err(|e| SimError::InvalidParameter(e.to_string()))?;

    let increments = |s: usize| -> Vec<(f64, f64)> {
        let mut rng = substream(run.seed, 2 * s as u64);
        let len = segment_len(s, n, run.segment_records);
        (0..len).map(|_| (step.sample(&mut rng), step.sample(&mut rng))).collect()
    };
    let walks: Vec<Vec<(f64, f64)>> = if run.parallel {
        (0..n_segments).into_par_iter().map(increments).collect()
    } else {
        (0..n_segments).map(increments).collect()
    };
    let mut starts = Vec::with_capacity(n_segments);
    let (mut a, mut b) = (exp.initial_phase_a, exp.initial_phase_b);
    for w in &walks {
        starts.push((a, b));
        for (da, db) in w {
            a += da;
            b += db;
        }
    }

    let segment = |s: usize| -> Vec<CoincidenceRecord> {
        let mut rng = substream(run.seed, 2 * s as u64 + 1);
        let first = s * run.segment_records;
        simulate_segment(exp, drift, &rates, starts[s], &walks[s], first, &mut rng)
    };
    let records = if run.parallel {
        (0..n_segments).into_par_iter().map(segment).flatten().collect()
    } else {
        (0..n_segments).flat_map(segment).collect()
    };
    Ok(records)
}

fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn segment_len(s: usize, n: usize, per: usize) -> usize {
    per.min(n - s * per)
}

fn simulate_segment(
    exp: &ExperimentSpec,
    drift: &DriftModel,
    rates: &Rates,
    start: (f64, f64),
    walk: &[(f64, f64)],
    first_index: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<CoincidenceRecord> {
    let retrieval = &exp.retrieval;
    let (mut a, mut b) = start;
    // each segment re-anchors its estimator on the true phase
    let mut est_a = retrieval.measure(a, wrap_tau(a), rng);
    let mut est_b = retrieval.measure(b, wrap_tau(b), rng);
    let g = rates.gates as f64;
    let mut out = Vec::with_capacity(walk.len());
    for (k, &(da, db)) in walk.iter().enumerate() {
        let sum_start = a + b - exp.offset_a - exp.offset_b;
        a += da;
        b += db;
        let sweep = da + db;
        let mid = sum_start + 0.5 * sweep;
        let averaged = Complex64::from_polar(sinc(0.5 * sweep), mid);
        let factor = (1.0 + (averaged * rates.fringe_scale).re).max(0.0);

        let accidental = rates.p_single * rates.p_single;
        let lambda_c = g * rates.live * rates.live * (rates.p_true * factor + accidental);
        let lambda_s = g * rates.live * rates.p_single;
        let coincidences = poisson(rng, lambda_c);
        let singles_1 = coincidences + poisson(rng, lambda_s - lambda_c);
        let singles_2 = coincidences + poisson(rng, lambda_s - lambda_c);

        let end_a = retrieval.measure(a, est_a.phase, rng);
        let end_b = retrieval.measure(b, est_b.phase, rng);
        let (phi_a, change_a) = midpoint(est_a.phase, end_a.phase);
        let (phi_b, change_b) = midpoint(est_b.phase, end_b.phase);
        let bin_a = retrieval.binning.bin_size(phi_a);
        let bin_b = retrieval.binning.bin_size(phi_b);
        out.push(CoincidenceRecord {
            timestamp: (first_index + k + 1) as f64 * drift.record_interval,
            phi_a_est: phi_a,
            phi_b_est: phi_b,
            bin_size_a: bin_a,
            bin_size_b: bin_b,
            singles_1,
            singles_2,
            coincidences,
            accidental_estimate: singles_1 as f64 * singles_2 as f64 / g,
            discarded: change_a > bin_a || change_b > bin_b,
        });
        est_a = end_a;
        est_b = end_b;
    }
    out
}

/// Circular midpoint of two angles and the absolute change between them.
fn midpoint(start: f64, end: f64) -> (f64, f64) {
    let d = circular_diff(end, start);
    (wrap_tau(start + 0.5 * d), d.abs())
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0
    } else {
        x.sin() / x
    }
}

fn poisson<R: Rng + ?Sized>(rng: &mut R, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).expect("finite mean").sample(rng) as u64
}
