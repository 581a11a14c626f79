//! From record streams to fringe visibility and the CHSH statistic.

mod chsh;
mod fit;
mod map;
mod report;

pub use chsh::{chsh_scan, correlation, ChshResult};
pub use fit::{fit_fringe, slice_fringe, FitResult, SliceResult};
pub use map::{bin_records, subtract_accidentals, BinLayout, CoincidenceMap, MapBin};
pub use report::{
    analyze, AnalysisOptions, AnalysisReport, FitSummary, RecordTally, SliceSummary,
};

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("no usable records after discarding")]
    NoData,
    #[error("invalid bin layout: {0}")]
    Layout(String),
    #[error("phase coverage insufficient: {0}")]
    Coverage(String),
    #[error("slice at phi_A = {phi_a_deg:.1} deg has {found} populated bins, need {needed}")]
    InsufficientData {
        phi_a_deg: f64,
        found: usize,
        needed: usize,
    },
    #[error("fit did not converge in {} iterations (last v = {:.6})", .0.iterations, .0.v)]
    NoConvergence(Box<FitResult>),
    #[error("fit normal equations are singular")]
    Singular,
    #[error("missing conjugate bins for CHSH settings (deg): {}", format_settings(.0))]
    MissingSettings(Vec<(f64, f64)>),
}

fn format_settings(s: &[(f64, f64)]) -> String {
    let shown: Vec<String> = s
        .iter()
        .take(8)
        .map(|(a, b)| format!("({a:.1}, {b:.1})"))
        .collect();
    let more = if s.len() > 8 {
        format!(" and {} more", s.len() - 8)
    } else {
        String::new()
    };
    format!("{}{}", shown.join(", "), more)
}

/// Bell-test flags derived from a fit and a CHSH scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BellAssessment {
    /// `|S| − 2 > 2σ_S`.
    pub violation: bool,
    /// Fitted visibility above `1/√2`.
    pub visibility_above_threshold: bool,
}

pub fn assess_bell(fit: &FitResult, chsh: Option<&ChshResult>) -> BellAssessment {
    BellAssessment {
        violation: chsh.is_some_and(|c| c.s - 2.0 > 2.0 * c.s_sigma),
        visibility_above_threshold: fit.v > std::f64::consts::FRAC_1_SQRT_2,
    }
}
