//! Monte Carlo of the gated coincidence experiment.
//!
//! Two levels of detail are provided. [`simulate_gates`] walks every detector
//! gate with explicit pair emission, dark counts and dead-time blanking; it is
//! used to check the analytic per-gate rates. [`simulate_run`] works at the
//! 200 ms record cadence, drawing Poisson counts from those rates while the
//! interferometer phases drift and are re-estimated from pump interference.

mod detector;
mod drift;
mod gate;
mod records;
mod retrieval;
mod run;

pub use detector::{
    accidental_probability, live_fraction, per_gate_probabilities, DetectorSpec,
    GateProbabilities, LossBudget, LossItem,
};
pub use drift::DriftModel;
pub use gate::{simulate_gates, GateCounts, GateExpectation, GateModel};
pub use records::{read_records_csv, write_records_csv, RecordHeader, RecordParseError};
pub use retrieval::{retrieve_phase, PhaseBinning, PhaseEstimate, PhaseRetrieval};
pub use run::{record_count, simulate_run, CoincidenceRecord, ExperimentSpec, RunSpec};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("pump intensity {0} outside [0, 1] after calibration")]
    Calibration(f64),
}
