use awg_entangle::analysis::{chsh_scan, fit_fringe, subtract_accidentals, BinLayout, CoincidenceMap, MapBin};
use awg_entangle::awg::{channel_spacing, spatial_dispersion, AwgDesign};
use awg_entangle::numeric::wrap_tau;
use awg_entangle::sim::{
    read_records_csv, simulate_gates, write_records_csv, CoincidenceRecord, GateModel, RecordHeader,
};
use proptest::prelude::*;
use std::f64::consts::{PI, SQRT_2, TAU};

fn design() -> impl Strategy<Value = AwgDesign> {
    (
        5e-6..60e-6f64,
        0.3e-3..8e-3f64,
        5e-6..300e-6f64,
        1.01..3.9f64,
        1.01..19.0f64,
        1.1e-6..1.9e-6f64,
        1..200u32,
    )
        .prop_map(|(pitch, focal_length, path_increment, slab_index, group_index, center_wavelength, grating_order)| {
            AwgDesign {
                pitch,
                focal_length,
                path_increment,
                slab_index,
                group_index,
                center_wavelength,
                array_count: 100,
                grating_order,
                insertion_loss_db: -3.0,
            }
        })
}

fn gate_model() -> impl Strategy<Value = GateModel> {
    (0.0..0.2f64, 0.0..0.3f64, 0.0..0.3f64, 0.0..2.0f64, 0.0..1e-3f64, 0u64..50).prop_map(
        |(mu, ts, ti, fringe_factor, bg, blanking_gates)| GateModel {
            mu,
            transmission_s: ts,
            transmission_i: ti,
            fringe_factor,
            background_s: bg,
            background_i: bg,
            blanking_gates,
        },
    )
}

fn fringe_map(c0: f64, v: f64, dphi: f64, floor: f64) -> CoincidenceMap {
    CoincidenceMap::from_fn(BinLayout::default(), 1.0, 1, |a, b| {
        let c = c0 * (1.0 - v * (a + b + dphi).cos()) + floor;
        MapBin {
            coincidences: c,
            accidentals: floor,
            records: 1,
            variance: c,
        }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dispersion_times_spacing_is_pitch(d in design()) {
        let product = spatial_dispersion(&d).unwrap() * channel_spacing(&d).unwrap().wavelength;
        prop_assert!((product / d.pitch - 1.0).abs() < 1e-12);
    }

    #[test]
    fn spacing_scales_inversely_with_path_increment(d in design(), k in 1.1..3.0f64) {
        let mut longer = d;
        longer.path_increment *= k;
        let ratio = channel_spacing(&d).unwrap().wavelength / channel_spacing(&longer).unwrap().wavelength;
        prop_assert!((ratio / k - 1.0).abs() < 1e-12);
    }

    #[test]
    fn layout_index_and_conjugate_round_trip(fine in 1.0..20.0f64, extra in 0.0..40.0f64, phase in 0.0..TAU) {
        let layout = BinLayout::from_degrees(fine, fine + extra).unwrap();
        let i = layout.index(phase);
        prop_assert_eq!(layout.index(layout.center(i)), i);
        let j = layout.conjugate(i);
        prop_assert_eq!(layout.conjugate(j), i);
        let shift = wrap_tau(layout.center(j) - layout.center(i));
        prop_assert!((shift - PI).abs() < 1e-9);
        let half = layout.width(i) / 2.0;
        let off = wrap_tau(phase - layout.center(i) + PI) - PI;
        prop_assert!(off.abs() <= half + 1e-12);
    }

    #[test]
    fn gate_counts_are_consistent_and_replayable(m in gate_model(), seed in any::<u64>()) {
        let a = simulate_gates(&m, 20_000, seed);
        prop_assert!(a.coincidences <= a.singles_s.min(a.singles_i));
        prop_assert!(a.singles_s <= a.gates && a.singles_i <= a.gates);
        prop_assert_eq!(a, simulate_gates(&m, 20_000, seed));
    }

    #[test]
    fn dead_time_never_raises_expected_rates(m in gate_model(), extra in 1u64..200) {
        let longer = GateModel { blanking_gates: m.blanking_gates + extra, ..m };
        let (e, l) = (m.expected(), longer.expected());
        prop_assert!(l.singles_s <= e.singles_s + 1e-15);
        prop_assert!(l.singles_i <= e.singles_i + 1e-15);
        prop_assert!(l.coincidences <= e.coincidences + 1e-15);
    }

    #[test]
    fn subtraction_never_lowers_visibility(c0 in 5.0..200.0f64, v in 0.05..0.98f64, dphi in 0.0..TAU, frac in 0.0..0.5f64) {
        let map = fringe_map(c0, v, dphi, frac * c0);
        let raw = fit_fringe(&map).unwrap();
        let sub = fit_fringe(&subtract_accidentals(&map)).unwrap();
        prop_assert!(sub.v >= raw.v - 1e-9);
        prop_assert!((sub.v - v).abs() < 1e-6);
    }

    #[test]
    fn chsh_bounded_by_visibility(v in 0.0..1.0f64, dphi in 0.0..TAU) {
        let s = chsh_scan(&fringe_map(50.0, v, dphi, 0.0)).unwrap();
        prop_assert!(s.s <= 2.0 * SQRT_2 * v + 1e-9);
    }

    #[test]
    fn records_survive_csv(rows in prop::collection::vec((0.0..TAU, 0.0..TAU, 0u64..1000, 0u64..1000, 0u64..50, 0.0..10.0f64, any::<bool>()), 1..20)) {
        let records: Vec<CoincidenceRecord> = rows
            .iter()
            .enumerate()
            .map(|(i, &(a, b, s1, s2, c, acc, discarded))| CoincidenceRecord {
                timestamp: 0.2 * (i + 1) as f64,
                phi_a_est: a,
                phi_b_est: b,
                bin_size_a: 3f64.to_radians(),
                bin_size_b: 45f64.to_radians(),
                singles_1: s1,
                singles_2: s2,
                coincidences: c.min(s1).min(s2),
                accidental_estimate: acc,
                discarded,
            })
            .collect();
        let header = RecordHeader { seed: Some(4), gates_per_record: Some(1000), record_interval: Some(0.2) };
        let mut buf = Vec::new();
        write_records_csv(&records, &header, &mut buf).unwrap();
        let (back, h) = read_records_csv(buf.as_slice()).unwrap();
        prop_assert_eq!(h, header);
        prop_assert_eq!(back.len(), records.len());
        for (x, y) in back.iter().zip(&records) {
            prop_assert_eq!((x.singles_1, x.singles_2, x.coincidences, x.discarded), (y.singles_1, y.singles_2, y.coincidences, y.discarded));
            prop_assert!((x.phi_a_est - y.phi_a_est).abs() < 1e-9 && (x.phi_b_est - y.phi_b_est).abs() < 1e-9);
            prop_assert!((x.accidental_estimate - y.accidental_estimate).abs() < 1e-9);
        }
    }
}
