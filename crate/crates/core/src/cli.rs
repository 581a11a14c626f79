//! Command implementations behind the `awg-entangle` binary.
//!
//! Each `cmd_*` function takes a validated [`RunConfig`], writes its files
//! and returns a serializable report. Failures map to exit code 2
//! (validation) or 3 (I/O) through [`CliError::exit_code`].

use crate::analysis::{analyze, AnalysisError, AnalysisOptions, AnalysisReport};
use crate::awg::{channel_spacing, spatial_dispersion, tolerance_propagation, LogSensitivities};
use crate::config::{ConfigError, RunConfig, Scenario};
use crate::pair_source::build_jsi_pulsed;
use crate::sim::{
    read_records_csv, simulate_run, write_records_csv, RecordHeader, RecordParseError,
};
use serde::Serialize;
use std::fmt;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        CliError::Validation(e.to_string())
    }
}

fn io_error(path: &Path, e: impl fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| io_error(parent, e))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| io_error(path, e))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let mut out = create(path)?;
    serde_json::to_writer_pretty(&mut out, value).map_err(|e| io_error(path, e))?;
    writeln!(out).map_err(|e| io_error(path, e))?;
    out.flush().map_err(|e| io_error(path, e))
}

/// Reads `path` (or starts from an empty file), applies `preset` and then
/// `overrides`, and validates.
pub fn load_config(
    path: Option<&Path>,
    preset: Option<&str>,
    overrides: &[String],
) -> Result<RunConfig, CliError> {
    let text = match path {
        Some(p) => fs::read_to_string(p).map_err(|e| io_error(p, e))?,
        None => String::new(),
    };
    let mut all = Vec::with_capacity(overrides.len() + 1);
    if let Some(p) = preset {
        all.push(format!("defaults=\"{p}\""));
    }
    all.extend(overrides.iter().cloned());
    Ok(RunConfig::from_toml_str(&text, &all)?)
}

#[derive(Debug, Clone, Serialize)]
pub struct PortRow {
    pub source: usize,
    pub input: i32,
    pub pump_focus: i32,
    pub signal: i32,
    pub idler: i32,
}

#[derive(Debug, Clone, Serialize)]
pub struct DesignReport {
    pub channel_spacing_nm: f64,
    pub channel_spacing_ghz: f64,
    pub spatial_dispersion_um_per_nm: f64,
    pub slab_index: f64,
    pub group_index: f64,
    pub grating_order: u32,
    pub center_wavelength_nm: f64,
    pub n_sources: usize,
    pub channel_offset: u32,
    pub ports: Vec<PortRow>,
    /// Relative channel-spacing error for a +1e-3 relative group-index error.
    pub spacing_error_per_index_error: f64,
    pub log_sensitivities: LogSensitivities,
}

impl fmt::Display for DesignReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "channel spacing     {:.4} nm  ({:.2} GHz)", self.channel_spacing_nm, self.channel_spacing_ghz)?;
        writeln!(f, "spatial dispersion  {:.3} um/nm", self.spatial_dispersion_um_per_nm)?;
        writeln!(f, "indices             n_s {:.4}  n_a {:.4}", self.slab_index, self.group_index)?;
        writeln!(f, "center wavelength   {:.2} nm", self.center_wavelength_nm)?;
        writeln!(f, "tolerance           dn_a/n_a = 1e-3 -> dDl/Dl = {:+.3e}", self.spacing_error_per_index_error)?;
        writeln!(f, "ports (N = {}, m = {}), indices in units of the facet pitch:", self.n_sources, self.channel_offset)?;
        writeln!(f, "  source  input  pump  signal  idler")?;
        for r in &self.ports {
            writeln!(f, "  {:>6}  {:>5}  {:>4}  {:>6}  {:>5}", r.source, r.input, r.pump_focus, r.signal, r.idler)?;
        }
        Ok(())
    }
}

pub fn cmd_design(config: &RunConfig) -> Result<DesignReport, CliError> {
    let s = config.build()?;
    let d = &s.design;
    let spacing = channel_spacing(d).map_err(|e| CliError::Validation(e.to_string()))?;
    let dispersion = spatial_dispersion(d).map_err(|e| CliError::Validation(e.to_string()))?;
    let a = &s.assignment;
    Ok(DesignReport {
        channel_spacing_nm: spacing.wavelength * 1e9,
        channel_spacing_ghz: spacing.frequency * 1e-9,
        // m/m -> um/nm
        spatial_dispersion_um_per_nm: dispersion * 1e-3,
        slab_index: d.slab_index,
        group_index: d.group_index,
        grating_order: d.grating_order,
        center_wavelength_nm: d.center_wavelength * 1e9,
        n_sources: a.n_sources,
        channel_offset: a.channel_offset,
        ports: (0..a.n_sources)
            .map(|j| PortRow {
                source: j,
                input: a.input_ports[j],
                pump_focus: a.pump_focus_ports[j],
                signal: a.output_ports_signal[j],
                idler: a.output_ports_idler[j],
            })
            .collect(),
        spacing_error_per_index_error: tolerance_propagation(d, 1e-3)
            .map_err(|e| CliError::Validation(e.to_string()))?,
        log_sensitivities: d.log_sensitivities(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SourceSpectrumSummary {
    pub source: usize,
    pub signal_center_ghz: f64,
    pub idler_center_ghz: f64,
    pub signal_fwhm_ghz: Option<f64>,
    pub idler_fwhm_ghz: Option<f64>,
    pub files: Vec<PathBuf>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectraReport {
    pub pump_frequency_ghz: f64,
    pub sources: Vec<SourceSpectrumSummary>,
    /// Spectral-overlap visibility of sources 0 and 1.
    pub spectral_visibility: Option<f64>,
}

/// Writes every port transmission and each source's pulsed joint spectral
/// intensity as CSV under `out_dir`.
pub fn cmd_spectra(config: &RunConfig, out_dir: &Path) -> Result<SpectraReport, CliError> {
    let s = config.build()?;
    fs::create_dir_all(out_dir).map_err(|e| io_error(out_dir, e))?;
    let mut sources = Vec::new();
    for (j, spec) in s.spectra()?.iter().enumerate() {
        let mut files = Vec::new();
        for (name, spectrum) in [("signal", &spec.signal), ("idler", &spec.idler)] {
            let path = out_dir.join(format!("source{j}_{name}.csv"));
            spectrum
                .write_csv(create(&path)?)
                .map_err(|e| io_error(&path, e))?;
            files.push(path);
        }
        let jsi = build_jsi_pulsed(&spec.signal, &spec.idler, &s.pump)
            .map_err(|e| CliError::Validation(e.to_string()))?;
        let path = out_dir.join(format!("source{j}_jsi.csv"));
        jsi.write_csv(create(&path)?).map_err(|e| io_error(&path, e))?;
        files.push(path);
        sources.push(SourceSpectrumSummary {
            source: j,
            signal_center_ghz: spec.signal.center_frequency * 1e-9,
            idler_center_ghz: spec.idler.center_frequency * 1e-9,
            signal_fwhm_ghz: spec.signal.measured_fwhm().map(|w| w * 1e-9),
            idler_fwhm_ghz: spec.idler.measured_fwhm().map(|w| w * 1e-9),
            files,
        });
    }
    let spectral_visibility = if sources.len() >= 2 {
        Some(s.spectral_visibility()?)
    } else {
        None
    };
    Ok(SpectraReport {
        pump_frequency_ghz: s.pump.center_frequency * 1e-9,
        sources,
        spectral_visibility,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulationSummary {
    pub seed: u64,
    pub records: usize,
    pub discarded: usize,
    pub total_gates: u64,
    pub singles1_rate_hz: f64,
    pub singles2_rate_hz: f64,
    pub coincidence_rate_hz: f64,
    pub accidental_rate_hz: f64,
    pub state_visibility: f64,
}

impl fmt::Display for SimulationSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "seed {} | {} records ({} discarded) | {:.3e} gates | singles {:.1} / {:.1} Hz | coincidences {:.3} Hz | accidentals {:.3} Hz",
            self.seed,
            self.records,
            self.discarded,
            self.total_gates as f64,
            self.singles1_rate_hz,
            self.singles2_rate_hz,
            self.coincidence_rate_hz,
            self.accidental_rate_hz
        )
    }
}

/// Runs the record-level simulation and writes the records CSV.
pub fn cmd_simulate(config: &RunConfig, out: &Path) -> Result<SimulationSummary, CliError> {
    let s = config.build()?;
    let exp = s.experiment()?;
    log::info!(
        "simulating {:.0} s with seed {} (state visibility {:.4})",
        s.run.duration,
        s.run.seed,
        exp.fringe.visibility()
    );
    let records = simulate_run(&exp, &s.drift, &s.run).map_err(|e| CliError::Validation(e.to_string()))?;
    let header = RecordHeader {
        seed: Some(s.run.seed),
        gates_per_record: Some(s.gates_per_record()),
        record_interval: Some(s.drift.record_interval),
    };
    let mut file = create(out)?;
    write_records_csv(&records, &header, &mut file).map_err(|e| io_error(out, e))?;
    file.flush().map_err(|e| io_error(out, e))?;

    let seconds = records.len() as f64 * s.drift.record_interval;
    let sum = |f: fn(&crate::sim::CoincidenceRecord) -> f64| records.iter().map(f).sum::<f64>() / seconds;
    Ok(SimulationSummary {
        seed: s.run.seed,
        records: records.len(),
        discarded: records.iter().filter(|r| r.discarded).count(),
        total_gates: records.len() as u64 * s.gates_per_record(),
        singles1_rate_hz: sum(|r| r.singles_1 as f64),
        singles2_rate_hz: sum(|r| r.singles_2 as f64),
        coincidence_rate_hz: sum(|r| r.coincidences as f64),
        accidental_rate_hz: sum(|r| r.accidental_estimate),
        state_visibility: exp.fringe.visibility(),
    })
}

fn analysis_options(s: &Scenario, config: &RunConfig, header: &RecordHeader) -> AnalysisOptions {
    AnalysisOptions {
        layout: s.layout,
        record_interval: header.record_interval.unwrap_or(s.drift.record_interval),
        gates_per_record: header.gates_per_record.unwrap_or_else(|| s.gates_per_record()),
        slices_deg: config.analysis.slices_deg.clone(),
        chsh_accidentals_subtracted: config.analysis.chsh_accidentals_subtracted,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalyzeOutput {
    pub seed: Option<u64>,
    #[serde(flatten)]
    pub report: AnalysisReport,
}

/// Analyzes a records CSV; writes the JSON report and map CSV when paths
/// are given.
pub fn cmd_analyze(
    records_path: &Path,
    config: &RunConfig,
    report_path: Option<&Path>,
    map_path: Option<&Path>,
) -> Result<AnalyzeOutput, CliError> {
    let s = config.build()?;
    let file = File::open(records_path).map_err(|e| io_error(records_path, e))?;
    let (records, header) = read_records_csv(file).map_err(|e| match e {
        RecordParseError::Io(e) => io_error(records_path, e),
        m @ RecordParseError::Malformed { .. } => {
            CliError::Validation(format!("{}: {m}", records_path.display()))
        }
    })?;
    let (report, map) = analyze(&records, &analysis_options(&s, config, &header))?;
    let output = AnalyzeOutput {
        seed: header.seed,
        report,
    };
    if let Some(path) = report_path {
        write_json(path, &output)?;
    }
    if let Some(path) = map_path {
        let mut out = create(path)?;
        if let Some(seed) = header.seed {
            writeln!(out, "# seed={seed}").map_err(|e| io_error(path, e))?;
        }
        map.write_csv(&mut out).map_err(|e| io_error(path, e))?;
    }
    Ok(output)
}

/// Pass/fail view of the reproduced results.
#[derive(Debug, Clone, Serialize)]
pub struct ShapeChecks {
    pub subtraction_raises_visibility: bool,
    pub visibility_sigmas_within_0_01: bool,
    pub chsh_exceeds_2_by_2_sigma: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct PaperReproduction {
    pub config: String,
    pub design: DesignReport,
    pub spectra: SpectraReport,
    pub simulation: SimulationSummary,
    pub analysis: AnalyzeOutput,
    pub checks: ShapeChecks,
}

impl fmt::Display for PaperReproduction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let r = &self.analysis.report;
        writeln!(f, "preset {}", self.config)?;
        writeln!(f, "channel spacing {:.2} GHz, spectral visibility {:.4}", self.design.channel_spacing_ghz, self.spectra.spectral_visibility.unwrap_or(f64::NAN))?;
        writeln!(f, "{}", self.simulation)?;
        writeln!(f, "V raw        = {:.3} ± {:.3}", r.fit.v, r.fit.v_sigma)?;
        writeln!(f, "V subtracted = {:.3} ± {:.3}", r.fit_subtracted.v, r.fit_subtracted.v_sigma)?;
        for s in &r.slices {
            match (s.v, s.v_sigma) {
                (Some(v), Some(sig)) => writeln!(f, "slice φ_A = {:>5.1}°: V = {v:.3} ± {sig:.3}", s.phi_a_deg)?,
                _ => writeln!(f, "slice φ_A = {:>5.1}°: {}", s.phi_a_deg, s.error.as_deref().unwrap_or("n/a"))?,
            }
        }
        match (&r.chsh, &r.chsh_error) {
            (Some(c), _) => writeln!(f, "|S| max      = {:.3} ± {:.3} at (a, a', b, b') = {:?} deg", c.s, c.s_sigma, c.settings_deg)?,
            (None, e) => writeln!(f, "|S|          : {}", e.as_deref().unwrap_or("n/a"))?,
        }
        writeln!(f, "Bell violation (2σ): {}", r.bell_violation)?;
        write!(
            f,
            "checks: V_raw < V_sub {} | σ ≤ 0.01 {} | |S| > 2 + 2σ {}",
            self.checks.subtraction_raises_visibility,
            self.checks.visibility_sigmas_within_0_01,
            self.checks.chsh_exceeds_2_by_2_sigma
        )
    }
}

/// Design report, spectra, simulation and analysis in one go, all under
/// `out_dir`.
pub fn cmd_reproduce_paper(config: &RunConfig, out_dir: &Path) -> Result<PaperReproduction, CliError> {
    fs::create_dir_all(out_dir).map_err(|e| io_error(out_dir, e))?;
    let config_path = out_dir.join("config.toml");
    fs::write(&config_path, config.to_toml_string()).map_err(|e| io_error(&config_path, e))?;
    let design = cmd_design(config)?;
    write_json(&out_dir.join("design.json"), &design)?;
    let spectra = cmd_spectra(config, &out_dir.join("spectra"))?;
    let records = out_dir.join("records.csv");
    let simulation = cmd_simulate(config, &records)?;
    let analysis = cmd_analyze(
        &records,
        config,
        Some(&out_dir.join("report.json")),
        Some(&out_dir.join("map.csv")),
    )?;
    let r = &analysis.report;
    let checks = ShapeChecks {
        subtraction_raises_visibility: r.fit.v < r.fit_subtracted.v,
        visibility_sigmas_within_0_01: r.fit.v_sigma <= 0.01 && r.fit_subtracted.v_sigma <= 0.01,
        chsh_exceeds_2_by_2_sigma: r.bell_violation,
    };
    let result = PaperReproduction {
        config: config.defaults.clone(),
        design,
        spectra,
        simulation,
        analysis,
        checks,
    };
    write_json(&out_dir.join("summary.json"), &result)?;
    Ok(result)
}
