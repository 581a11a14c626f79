use super::{
    assess_bell, bin_records, chsh_scan, fit_fringe, slice_fringe, subtract_accidentals,
    AnalysisError, BinLayout, ChshResult, CoincidenceMap, FitResult,
};
use crate::sim::CoincidenceRecord;
use serde::Serialize;

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisOptions {
    pub layout: BinLayout,
    pub record_interval: f64,
    pub gates_per_record: u64,
    pub slices_deg: Vec<f64>,
    pub chsh_accidentals_subtracted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitSummary {
    pub c0: f64,
    pub c0_sigma: f64,
    pub v: f64,
    pub v_sigma: f64,
    pub delta_phi_deg: f64,
    pub delta_phi_sigma_deg: f64,
    pub chi_square: f64,
    pub dof: usize,
    pub out_of_range: bool,
}

impl From<&FitResult> for FitSummary {
    fn from(f: &FitResult) -> Self {
        Self {
            c0: f.c0,
            c0_sigma: f.c0_sigma,
            v: f.v,
            v_sigma: f.v_sigma,
            delta_phi_deg: f.delta_phi.to_degrees(),
            delta_phi_sigma_deg: f.delta_phi_sigma.to_degrees(),
            chi_square: f.chi_square,
            dof: f.dof,
            out_of_range: f.out_of_range,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SliceSummary {
    pub requested_deg: f64,
    pub phi_a_deg: f64,
    pub v: Option<f64>,
    pub v_sigma: Option<f64>,
    pub bins: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RecordTally {
    pub total: usize,
    pub kept: usize,
    pub coincidences: u64,
    pub accidentals: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisReport {
    pub records: RecordTally,
    pub fit: FitSummary,
    pub fit_subtracted: FitSummary,
    pub slices: Vec<SliceSummary>,
    /// Absent when some setting lacks its conjugate bins; see `chsh_error`.
    pub chsh: Option<ChshResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chsh_error: Option<String>,
    pub bell_violation: bool,
    pub visibility_above_threshold: bool,
}

/// Bins the records, fits raw and accidental-subtracted maps, slices the
/// raw map and scans CHSH. Returns the report and the raw map.
pub fn analyze(
    records: &[CoincidenceRecord],
    options: &AnalysisOptions,
) -> Result<(AnalysisReport, CoincidenceMap), AnalysisError> {
    let map = bin_records(
        records,
        options.layout,
        options.record_interval,
        options.gates_per_record,
    )?;
    let subtracted = subtract_accidentals(&map);
    let fit = fit_fringe(&map)?;
    let fit_sub = fit_fringe(&subtracted)?;
    let slices = options
        .slices_deg
        .iter()
        .map(|&phi| match slice_fringe(&map, phi) {
            Ok(s) => SliceSummary {
                requested_deg: phi,
                phi_a_deg: s.phi_a_deg,
                v: Some(s.fit.v),
                v_sigma: Some(s.fit.v_sigma),
                bins: s.bins,
                error: None,
            },
            Err(e) => SliceSummary {
                requested_deg: phi,
                phi_a_deg: options.layout.center(options.layout.index(phi.to_radians())).to_degrees(),
                v: None,
                v_sigma: None,
                bins: 0,
                error: Some(e.to_string()),
            },
        })
        .collect();
    let (chsh_map, chsh_fit) = if options.chsh_accidentals_subtracted {
        (&subtracted, &fit_sub)
    } else {
        (&map, &fit)
    };
    let (chsh, chsh_error) = match chsh_scan(chsh_map) {
        Ok(c) => (Some(c), None),
        Err(e @ AnalysisError::MissingSettings(_)) => {
            log::warn!("CHSH skipped: {e}");
            (None, Some(e.to_string()))
        }
        Err(e) => return Err(e),
    };
    let bell = assess_bell(chsh_fit, chsh.as_ref());
    let kept: Vec<&CoincidenceRecord> = records.iter().filter(|r| !r.discarded).collect();
    let report = AnalysisReport {
        records: RecordTally {
            total: records.len(),
            kept: kept.len(),
            coincidences: kept.iter().map(|r| r.coincidences).sum(),
            accidentals: kept.iter().map(|r| r.accidental_estimate).sum(),
        },
        fit: FitSummary::from(&fit),
        fit_subtracted: FitSummary::from(&fit_sub),
        slices,
        chsh,
        chsh_error,
        bell_violation: bell.violation,
        visibility_above_threshold: bell.visibility_above_threshold,
    };
    Ok((report, map))
}
