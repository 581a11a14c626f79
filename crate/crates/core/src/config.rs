//! TOML run configuration.
//!
//! A config file picks a preset with the top-level `defaults` key (`"paper"`
//! or `"desk"`); every key it sets overrides the preset, and `--set
//! section.key=value` overrides the file. Unknown sections or keys are
//! rejected.

use crate::analysis::BinLayout;
use crate::awg::{
    plan_ports, port_transmission, Arm, AwgDesign, GridSpec, PassbandModel, PassbandShape,
    PortAssignment, PortOffset, TransmissionSpectrum,
};
use crate::pair_source::{build_jsa_quasi_cw, JointSpectralAmplitude, PumpSpec};
use crate::sim::{
    DetectorSpec, DriftModel, ExperimentSpec, LossBudget, LossItem, PhaseBinning,
    PhaseRetrieval, RunSpec,
};
use crate::state::{build_state, visibility_from_spectra, PathState};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("[{section}] {message}")]
    Invalid { section: &'static str, message: String },
}

fn invalid(section: &'static str, e: impl ToString) -> ConfigError {
    ConfigError::Invalid {
        section,
        message: e.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub defaults: String,
    pub awg: AwgSection,
    pub ports: PortsSection,
    pub pump: PumpSection,
    pub detectors: DetectorsSection,
    pub losses: LossesSection,
    pub drift: DriftSection,
    pub run: RunSection,
    pub analysis: AnalysisSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AwgSection {
    pub d_um: f64,
    pub f_mm: f64,
    #[serde(rename = "delta_L_um")]
    pub delta_l_um: f64,
    pub n_s: f64,
    /// When absent, `n_a` is solved from `calibrate_delta_nu_ghz`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_a: Option<f64>,
    pub calibrate_delta_nu_ghz: f64,
    pub lambda0_nm: f64,
    pub array_count: u32,
    pub grating_order: u32,
    pub insertion_loss_db: f64,
    /// `"gaussian"` or `"flat-top"`.
    pub passband_model: String,
    pub flat_top_order: u32,
    pub fwhm_ghz: f64,
    /// `[signal, idler]` center errors per source.
    pub port_offset_errors_ghz: Vec<[f64; 2]>,
    pub grid_resolution_ghz: f64,
    pub grid_half_span_channels: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PortsSection {
    pub n_sources: usize,
    pub channel_offset: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PumpSection {
    pub repetition_rate_mhz: f64,
    pub pulse_width_ps: f64,
    pub bandwidth_ghz: f64,
    /// Mean pairs per gate from each source at unit pump amplitude.
    pub pair_probability: f64,
    pub leakage_rejection_db: f64,
    /// Empty means all zero.
    pub phases_deg: Vec<f64>,
    /// Empty means all one.
    pub amplitudes: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorsSection {
    pub efficiency: f64,
    pub gate_width_ns: f64,
    pub dark_count_hz: f64,
    pub dead_time_us: f64,
    pub gate_rate_mhz: f64,
    pub background_per_gate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossesSection {
    pub collection_db: f64,
    pub facet_coupling_db: f64,
    pub awg_db: f64,
    pub spectral_filters_db: f64,
    pub other_fiber_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriftSection {
    pub step_std_deg: f64,
    pub record_interval_s: f64,
    pub fast_noise_std_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub duration_s: f64,
    pub seed: u64,
    pub segment_records: usize,
    pub polarization_factor: f64,
    /// Standard deviation of the normalized pump-leak intensity reading.
    pub retrieval_noise: f64,
    pub initial_phase_a_deg: f64,
    pub initial_phase_b_deg: f64,
    /// `φ_A − φ_s`.
    pub offset_a_deg: f64,
    /// `φ_B − φ_i`.
    pub offset_b_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSection {
    pub fine_bin_deg: f64,
    pub coarse_bin_deg: f64,
    pub slices_deg: Vec<f64>,
    pub chsh_accidentals_subtracted: bool,
}

pub const PRESETS: [&str; 2] = ["paper", "desk"];

impl RunConfig {
    /// Published device and detector parameters, 24 h run.
    pub fn paper() -> Self {
        Self {
            defaults: "paper".into(),
            awg: AwgSection {
                d_um: 30.0,
                f_mm: 1.75,
                delta_l_um: 63.0,
                n_s: 1.45,
                n_a: None,
                calibrate_delta_nu_ghz: 200.0,
                lambda0_nm: 1560.6,
                array_count: 100,
                grating_order: 53,
                insertion_loss_db: -6.7,
                passband_model: "gaussian".into(),
                flat_top_order: 2,
                fwhm_ghz: 90.0,
                port_offset_errors_ghz: vec![[10.0, -10.0], [-4.0, 4.0]],
                grid_resolution_ghz: 0.5,
                grid_half_span_channels: 3.0,
            },
            ports: PortsSection {
                n_sources: 2,
                channel_offset: 3,
            },
            pump: PumpSection {
                repetition_rate_mhz: 100.0,
                pulse_width_ps: 200.0,
                bandwidth_ghz: 2.2,
                pair_probability: 0.01,
                leakage_rejection_db: -35.0,
                phases_deg: vec![],
                amplitudes: vec![],
            },
            detectors: DetectorsSection {
                efficiency: 0.21,
                gate_width_ns: 1.0,
                dark_count_hz: 2100.0,
                dead_time_us: 10.0,
                gate_rate_mhz: 100.0,
                background_per_gate: 0.0,
            },
            losses: LossesSection {
                collection_db: -17.5,
                facet_coupling_db: -1.0,
                awg_db: -6.7,
                spectral_filters_db: -2.8,
                other_fiber_db: -7.0,
            },
            drift: DriftSection {
                step_std_deg: 2.0,
                record_interval_s: 0.2,
                fast_noise_std_deg: 0.0,
            },
            run: RunSection {
                duration_s: 86_400.0,
                seed: 1,
                segment_records: 1000,
                polarization_factor: 1.0,
                retrieval_noise: 0.005,
                initial_phase_a_deg: 90.0,
                initial_phase_b_deg: 90.0,
                offset_a_deg: 0.0,
                offset_b_deg: 0.0,
            },
            analysis: AnalysisSection {
                fine_bin_deg: 3.0,
                coarse_bin_deg: 45.0,
                slices_deg: vec![51.0, 141.0],
                chsh_accidentals_subtracted: true,
            },
        }
    }

    /// Ten-minute run with the pair rate raised and coarser bins, so that a
    /// laptop reproduces the shape of the 24 h results.
    pub fn desk() -> Self {
        let mut c = Self::paper();
        c.defaults = "desk".into();
        c.pump.pair_probability = 0.04;
        c.drift.step_std_deg = 10.0;
        c.drift.record_interval_s = 0.05;
        c.run.duration_s = 600.0;
        c.run.polarization_factor = 0.86;
        c.analysis.fine_bin_deg = 22.5;
        c
    }

    pub fn preset(name: &str) -> Result<Self, ConfigError> {
        match name {
            "paper" => Ok(Self::paper()),
            "desk" => Ok(Self::desk()),
            other => Err(ConfigError::Parse(format!(
                "unknown preset '{other}', expected one of {PRESETS:?}"
            ))),
        }
    }

    /// Parses a config file body, applies `section.key=value` overrides and
    /// validates the result.
    pub fn from_toml_str(text: &str, overrides: &[String]) -> Result<Self, ConfigError> {
        let mut user: toml::Table = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        for o in overrides {
            apply_override(&mut user, o)?;
        }
        let preset = match user.get("defaults") {
            None => "paper",
            Some(toml::Value::String(s)) => s.as_str(),
            Some(other) => {
                return Err(ConfigError::Parse(format!("defaults must be a string, got {other}")))
            }
        };
        let mut merged = toml::Table::try_from(Self::preset(preset)?)
            .map_err(|e| ConfigError::Parse(e.to_string()))?;
        merge(&mut merged, user);
        let config: Self = toml::Value::Table(merged)
            .try_into()
            .map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
        config.build()?;
        Ok(config)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Builds and validates every domain object.
    pub fn build(&self) -> Result<Scenario, ConfigError> {
        let a = &self.awg;
        let base = AwgDesign {
            pitch: a.d_um / 1e6,
            focal_length: a.f_mm / 1e3,
            path_increment: a.delta_l_um / 1e6,
            slab_index: a.n_s,
            group_index: a.n_a.unwrap_or(a.n_s),
            center_wavelength: a.lambda0_nm / 1e9,
            array_count: a.array_count,
            grating_order: a.grating_order,
            insertion_loss_db: a.insertion_loss_db,
        };
        let design = match a.n_a {
            Some(_) => base,
            None => base
                .calibrated_to(a.calibrate_delta_nu_ghz * 1e9)
                .map_err(|e| invalid("awg", e))?,
        };
        design.validate().map_err(|e| invalid("awg", e))?;

        let shape = match a.passband_model.as_str() {
            "gaussian" => PassbandShape::Gaussian,
            "flat-top" => PassbandShape::FlatTop {
                order: a.flat_top_order,
            },
            other => {
                return Err(invalid(
                    "awg",
                    format!("passband_model must be \"gaussian\" or \"flat-top\", got \"{other}\""),
                ))
            }
        };
        let passband = PassbandModel {
            shape,
            fwhm: a.fwhm_ghz * 1e9,
            port_offsets: a
                .port_offset_errors_ghz
                .iter()
                .map(|[s, i]| PortOffset {
                    signal: s * 1e9,
                    idler: i * 1e9,
                })
                .collect(),
            grid: GridSpec {
                resolution: a.grid_resolution_ghz * 1e9,
                half_span_channels: a.grid_half_span_channels,
            },
        };
        passband.validate().map_err(|e| invalid("awg", e))?;

        let assignment = plan_ports(&design, self.ports.n_sources, self.ports.channel_offset)
            .map_err(|e| invalid("ports", e))?;

        let p = &self.pump;
        let pump = PumpSpec {
            center_frequency: design.center_frequency(),
            repetition_rate: p.repetition_rate_mhz * 1e6,
            pulse_width: p.pulse_width_ps / 1e12,
            bandwidth_fwhm: p.bandwidth_ghz * 1e9,
            pair_probability: p.pair_probability,
            leakage_rejection_db: p.leakage_rejection_db,
        };
        pump.validate().map_err(|e| invalid("pump", e))?;
        let n = self.ports.n_sources;
        let phases = per_source(&p.phases_deg, n, 0.0, "phases_deg")?
            .into_iter()
            .map(f64::to_radians)
            .collect();
        let amplitudes = per_source(&p.amplitudes, n, 1.0, "amplitudes")?;

        let d = &self.detectors;
        let detector = DetectorSpec {
            efficiency: d.efficiency,
            gate_width: d.gate_width_ns / 1e9,
            dark_count_rate: d.dark_count_hz,
            dead_time: d.dead_time_us / 1e6,
            gate_rate: d.gate_rate_mhz * 1e6,
            background_per_gate: d.background_per_gate,
        };
        detector.validate().map_err(|e| invalid("detectors", e))?;

        let l = &self.losses;
        let item = |name: &str, db| LossItem {
            name: name.into(),
            db,
        };
        let losses = LossBudget {
            collection_db: l.collection_db,
            components: vec![
                item("facet coupling", l.facet_coupling_db),
                item("awg", l.awg_db),
                item("spectral filters", l.spectral_filters_db),
                item("other fiber components", l.other_fiber_db),
            ],
        };
        losses.validate().map_err(|e| invalid("losses", e))?;

        let drift = DriftModel {
            step_std: self.drift.step_std_deg.to_radians(),
            record_interval: self.drift.record_interval_s,
            fast_noise_std: self.drift.fast_noise_std_deg.to_radians(),
        };
        drift.validate().map_err(|e| invalid("drift", e))?;

        let r = &self.run;
        if !(r.duration_s >= drift.record_interval) {
            return Err(invalid(
                "run",
                format!("duration_s {} is shorter than one record interval", r.duration_s),
            ));
        }
        if r.segment_records == 0 {
            return Err(invalid("run", "segment_records must be > 0"));
        }
        if !(0.0..=1.0).contains(&r.polarization_factor) {
            return Err(invalid("run", "polarization_factor must lie in [0, 1]"));
        }
        if !(r.retrieval_noise >= 0.0) {
            return Err(invalid("run", "retrieval_noise must be >= 0"));
        }
        let layout = BinLayout::from_degrees(self.analysis.fine_bin_deg, self.analysis.coarse_bin_deg)
            .map_err(|e| invalid("analysis", e))?;

        Ok(Scenario {
            design,
            assignment,
            passband,
            pump,
            phases,
            amplitudes,
            detector,
            losses,
            drift,
            run: RunSpec {
                duration: r.duration_s,
                seed: r.seed,
                segment_records: r.segment_records,
                parallel: true,
            },
            layout,
            retrieval: PhaseRetrieval {
                intensity_noise: r.retrieval_noise,
                binning: PhaseBinning {
                    fine: layout.fine,
                    coarse: layout.coarse,
                },
            },
            polarization_factor: r.polarization_factor,
            initial_phases: (r.initial_phase_a_deg.to_radians(), r.initial_phase_b_deg.to_radians()),
            offsets: (r.offset_a_deg.to_radians(), r.offset_b_deg.to_radians()),
        })
    }
}

fn per_source(values: &[f64], n: usize, fill: f64, key: &str) -> Result<Vec<f64>, ConfigError> {
    match values.len() {
        0 => Ok(vec![fill; n]),
        len if len == n => Ok(values.to_vec()),
        len => Err(invalid(
            "pump",
            format!("{key} has {len} entries for {n} sources"),
        )),
    }
}

fn merge(base: &mut toml::Table, over: toml::Table) {
    for (key, value) in over {
        match (base.get_mut(&key), value) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(key, v);
            }
        }
    }
}

fn apply_override(table: &mut toml::Table, spec: &str) -> Result<(), ConfigError> {
    let (path, raw) = spec
        .split_once('=')
        .ok_or_else(|| ConfigError::Parse(format!("override '{spec}' is not key=value")))?;
    let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let keys: Vec<&str> = path.trim().split('.').collect();
    let (last, parents) = keys.split_last().expect("split yields one item");
    let mut cursor = table;
    for k in parents {
        cursor = cursor
            .entry(k.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| ConfigError::Parse(format!("override '{spec}': '{k}' is not a section")))?;
    }
    cursor.insert(last.to_string(), value);
    Ok(())
}

/// Validated domain objects for one configured experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub design: AwgDesign,
    pub assignment: PortAssignment,
    pub passband: PassbandModel,
    pub pump: PumpSpec,
    /// Pump phase per source, radians.
    pub phases: Vec<f64>,
    pub amplitudes: Vec<f64>,
    pub detector: DetectorSpec,
    pub losses: LossBudget,
    pub drift: DriftModel,
    pub run: RunSpec,
    pub layout: BinLayout,
    pub retrieval: PhaseRetrieval,
    pub polarization_factor: f64,
    pub initial_phases: (f64, f64),
    pub offsets: (f64, f64),
}

/// Signal and idler transmission of one source.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceSpectra {
    pub signal: TransmissionSpectrum,
    pub idler: TransmissionSpectrum,
}

impl Scenario {
    pub fn spectra(&self) -> Result<Vec<SourceSpectra>, ConfigError> {
        (0..self.assignment.n_sources)
            .map(|j| {
                let arm = |arm| port_transmission(&self.design, &self.assignment, j, arm, &self.passband);
                Ok(SourceSpectra {
                    signal: arm(Arm::Signal).map_err(|e| invalid("awg", e))?,
                    idler: arm(Arm::Idler).map_err(|e| invalid("awg", e))?,
                })
            })
            .collect()
    }

    pub fn jsas(&self) -> Result<Vec<JointSpectralAmplitude>, ConfigError> {
        self.spectra()?
            .iter()
            .map(|s| build_jsa_quasi_cw(&s.signal, &s.idler, &self.pump).map_err(|e| invalid("pump", e)))
            .collect()
    }

    pub fn state(&self) -> Result<PathState, ConfigError> {
        build_state(self.jsas()?, &self.phases, &self.amplitudes).map_err(|e| invalid("pump", e))
    }

    /// Spectral-overlap visibility of the first two sources.
    pub fn spectral_visibility(&self) -> Result<f64, ConfigError> {
        let s = self.spectra()?;
        if s.len() < 2 {
            return Err(invalid("ports", "visibility needs at least two sources"));
        }
        visibility_from_spectra(
            &s[0].signal,
            &s[0].idler,
            &s[1].signal,
            &s[1].idler,
            self.pump.center_frequency,
        )
        .map_err(|e| invalid("awg", e))
    }

    /// Total mean pairs per gate across sources.
    pub fn pair_probability(&self) -> f64 {
        self.pump.pair_probability * self.amplitudes.iter().map(|a| a * a).sum::<f64>()
    }

    pub fn gates_per_record(&self) -> u64 {
        (self.drift.record_interval * self.detector.gate_rate).round() as u64
    }

    pub fn experiment(&self) -> Result<ExperimentSpec, ConfigError> {
        let fringe = self
            .state()?
            .fringe_profile()
            .map_err(|e| invalid("ports", e))?;
        Ok(ExperimentSpec {
            fringe,
            polarization_factor: self.polarization_factor,
            pair_probability: self.pair_probability(),
            losses: self.losses.clone(),
            detector: self.detector,
            offset_a: self.offsets.0,
            offset_b: self.offsets.1,
            initial_phase_a: self.initial_phases.0,
            initial_phase_b: self.initial_phases.1,
            retrieval: self.retrieval,
        })
    }
}
