//! Joint spectrum of one source: the quasi-cw amplitude used for the state
//! and the pulsed-pump intensity whose anti-diagonal width is set by the
//! pump bandwidth.

use awg_entangle::awg::{plan_ports, port_transmission, Arm, AwgDesign, PassbandModel};
use awg_entangle::pair_source::{build_jsa_quasi_cw, build_jsi_pulsed, sfwm_channel_pair, PumpSpec};
use std::error::Error;

pub fn run() -> Result<(), Box<dyn Error>> {
    let design = AwgDesign::paper();
    let ports = plan_ports(&design, 2, 3)?;
    let passband = PassbandModel::gaussian(90e9);
    let pump = PumpSpec::paper(design.center_frequency());
    println!(
        "transform-limited bandwidth of a 200 ps pulse: {:.2} GHz",
        PumpSpec::transform_limited_bandwidth(pump.pulse_width) * 1e-9
    );

    let (nu_s, nu_i) = sfwm_channel_pair(&pump, 200e9, 3)?;
    println!(
        "pump {:.4} THz -> signal {:.4} THz, idler {:.4} THz",
        pump.center_frequency * 1e-12,
        nu_s * 1e-12,
        nu_i * 1e-12
    );

    let f = port_transmission(&design, &ports, 0, Arm::Signal, &passband)?;
    let g = port_transmission(&design, &ports, 0, Arm::Idler, &passband)?;

    let jsa = build_jsa_quasi_cw(&f, &g, &pump)?;
    println!(
        "quasi-cw JSA: {} cells on the anti-diagonal, norm {:.9}, brightness {:.3e}",
        jsa.cells().len(),
        jsa.norm(),
        jsa.brightness()
    );

    let jsi = build_jsi_pulsed(&f, &g, &pump)?;
    let (ps, pi) = jsi.peak();
    println!(
        "pulsed JSI: {} nonzero cells, peak at ({:.4}, {:.4}) THz",
        jsi.nonzero().count(),
        ps * 1e-12,
        pi * 1e-12
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run()
}
