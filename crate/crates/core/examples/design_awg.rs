//! Channel spacing, focal-plane dispersion and port layout of the two-source
//! chip, followed by the three-source layout and a fabrication tolerance.
//!
//! ```text
//! cargo run --example design_awg
//! ```

use awg_entangle::awg::{
    channel_spacing, plan_ports, spatial_dispersion, tolerance_propagation, AwgDesign,
};
use std::error::Error;

pub fn run() -> Result<(), Box<dyn Error>> {
    let design = AwgDesign::paper();
    let spacing = channel_spacing(&design)?;
    let dispersion = spatial_dispersion(&design)?;
    println!(
        "Δλ = {:.4} nm, Δν = {:.1} GHz, Δx/Δλ = {:.2} µm/nm",
        spacing.wavelength * 1e9,
        spacing.frequency * 1e-9,
        dispersion * 1e-3
    );
    // one channel step on the focal plane is exactly one waveguide pitch
    println!("Δx per channel = {:.3} µm", dispersion * spacing.wavelength * 1e6);

    for (n, m) in [(2, 3), (3, 4)] {
        let ports = plan_ports(&design, n, m)?;
        println!("N = {n}, m = {m}");
        for j in 0..n {
            println!(
                "  input {:>2} -> pump {:>2}, A = {:>2}, B = {:>2}",
                ports.input_ports[j],
                ports.pump_focus_ports[j],
                ports.output_ports_signal[j],
                ports.output_ports_idler[j]
            );
        }
    }

    match plan_ports(&design, 3, 2) {
        Err(e) => println!("N = 3, m = 2 rejected: {e}"),
        Ok(_) => return Err("overlapping layout accepted".into()),
    }

    let rel = tolerance_propagation(&design, 1e-3)?;
    println!("δn_a/n_a = 1e-3 -> δΔλ/Δλ = {rel:+.2e}");
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run()
}
