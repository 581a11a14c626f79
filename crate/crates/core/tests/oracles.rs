use approx::assert_relative_eq;
use awg_entangle::analysis::{
    analyze, bin_records, chsh_scan, fit_fringe, slice_fringe, AnalysisOptions, BinLayout,
    CoincidenceMap, MapBin,
};
use awg_entangle::config::RunConfig;
use awg_entangle::sim::{simulate_gates, simulate_run, CoincidenceRecord, GateModel};
use awg_entangle::state::{coincidence_probability, ProjectionSetting};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::{PI, SQRT_2, TAU};

#[test]
fn fringe_profile_matches_direct_cell_sum() {
    let scenario = RunConfig::paper().build().unwrap();
    let state = scenario.state().unwrap();
    let profile = state.fringe_profile().unwrap();
    for k in 0..24 {
        let sum = k as f64 * TAU / 24.0;
        let direct = coincidence_probability(&state, &ProjectionSetting::new(sum, 0.0)).unwrap();
        assert_relative_eq!(direct, profile.probability(sum), max_relative = 1e-10);
        let split = coincidence_probability(&state, &ProjectionSetting::new(0.3, sum - 0.3)).unwrap();
        assert_relative_eq!(split, direct, max_relative = 1e-10);
    }
}

#[test]
fn state_visibility_agrees_with_spectral_overlap() {
    let scenario = RunConfig::paper().build().unwrap();
    let from_state = scenario.state().unwrap().fringe_profile().unwrap().visibility();
    let from_spectra = scenario.spectral_visibility().unwrap();
    assert!((from_state - from_spectra).abs() < 1e-3, "{from_state} vs {from_spectra}");
}

#[test]
fn accidental_estimate_matches_uncorrelated_coincidences() {
    // no pairs: every coincidence is accidental, mean S1·S2/G per gate
    let model = GateModel {
        mu: 0.0,
        transmission_s: 0.0,
        transmission_i: 0.0,
        fringe_factor: 1.0,
        background_s: 0.02,
        background_i: 0.03,
        blanking_gates: 0,
    };
    let gates = 2_000_000;
    let c = simulate_gates(&model, gates, 5);
    let estimate = c.singles_s as f64 * c.singles_i as f64 / gates as f64;
    let z = (c.coincidences as f64 - estimate) / estimate.sqrt();
    assert!(z.abs() < 3.0, "{} vs {estimate}", c.coincidences);
}

#[test]
fn uniform_phases_fill_bins_by_area() {
    let layout = BinLayout::default();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let records: Vec<CoincidenceRecord> = (0..400_000)
        .map(|i| CoincidenceRecord {
            timestamp: i as f64,
            phi_a_est: rng.random_range(0.0..TAU),
            phi_b_est: rng.random_range(0.0..TAU),
            bin_size_a: 0.0,
            bin_size_b: 0.0,
            singles_1: 0,
            singles_2: 0,
            coincidences: 1,
            accidental_estimate: 0.0,
            discarded: false,
        })
        .collect();
    let map = bin_records(&records, layout, 1.0, 1).unwrap();
    let n = map.axis_len();
    let mut chi2 = 0.0;
    for a in 0..n {
        for b in 0..n {
            let expected = records.len() as f64 * layout.width(a) * layout.width(b) / (TAU * TAU);
            chi2 += (map.bin(a, b).records as f64 - expected).powi(2) / expected;
        }
    }
    let dof = (n * n - 1) as f64;
    assert!((chi2 - dof).abs() < 5.0 * (2.0 * dof).sqrt(), "χ² {chi2} for {dof} dof");
}

fn noiseless(c0: f64, v: f64, dphi: f64) -> CoincidenceMap {
    CoincidenceMap::from_fn(BinLayout::default(), 0.5, 1000, |a, b| {
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
fn slices_agree_with_global_fit() {
    let map = noiseless(40.0, 0.9, 2.0);
    let global = fit_fringe(&map).unwrap();
    for phi in [0.0, 51.0, 93.0, 141.0, 270.0] {
        let slice = slice_fringe(&map, phi).unwrap();
        assert_relative_eq!(slice.fit.v, global.v, epsilon = 1e-9);
        assert_relative_eq!(slice.fit.c0, global.c0, max_relative = 1e-9);
    }
}

#[test]
fn chsh_matches_tsirelson_scaling() {
    for (v, dphi) in [(1.0, 0.0), (0.8, 0.0), (0.8, PI / 2.0)] {
        let s = chsh_scan(&noiseless(30.0, v, dphi)).unwrap();
        assert_relative_eq!(s.s, 2.0 * SQRT_2 * v, epsilon = 1e-9);
    }
}

#[test]
fn ideal_pipeline_recovers_high_visibility() {
    let mut cfg = RunConfig::desk();
    cfg.awg.port_offset_errors_ghz.clear();
    cfg.run.polarization_factor = 1.0;
    cfg.run.duration_s = 900.0;
    let s = cfg.build().unwrap();
    let exp = s.experiment().unwrap();
    assert!(exp.fringe.visibility() > 0.999);
    let records = simulate_run(&exp, &s.drift, &s.run).unwrap();
    let options = AnalysisOptions {
        layout: s.layout,
        record_interval: s.drift.record_interval,
        gates_per_record: s.gates_per_record(),
        slices_deg: vec![],
        chsh_accidentals_subtracted: true,
    };
    let (report, _) = analyze(&records, &options).unwrap();
    // bin averaging over 22.5°/45° cells costs a few percent
    assert!(report.fit_subtracted.v > 0.93, "{:?}", report.fit_subtracted);
    assert!(report.chsh.as_ref().unwrap().s > 2.4, "{:?}", report.chsh);
    assert!(report.bell_violation);
}
