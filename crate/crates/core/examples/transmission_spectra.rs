//! Passband spectra of every signal and idler port, written as CSV.
//!
//! ```text
//! cargo run --example transmission_spectra -- /tmp/spectra
//! ```

use awg_entangle::awg::{plan_ports, port_transmission, Arm, AwgDesign, PassbandModel, PortOffset};
use std::error::Error;
use std::fs::{self, File};
use std::path::PathBuf;

pub fn run() -> Result<(), Box<dyn Error>> {
    let out: PathBuf = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("awg-entangle-spectra"));
    fs::create_dir_all(&out)?;

    let design = AwgDesign::paper();
    let ports = plan_ports(&design, 2, 3)?;
    let passband = PassbandModel::gaussian(90e9).with_offsets(vec![
        PortOffset {
            signal: 10e9,
            idler: -10e9,
        },
        PortOffset {
            signal: -4e9,
            idler: 4e9,
        },
    ]);

    for source in 0..ports.n_sources {
        for (arm, name) in [(Arm::Signal, "signal"), (Arm::Idler, "idler")] {
            let spectrum = port_transmission(&design, &ports, source, arm, &passband)?;
            let path = out.join(format!("source{source}_{name}.csv"));
            spectrum.write_csv(File::create(&path)?)?;
            println!(
                "source {source} {name:<6} center {:.3} THz, fwhm {:.1} GHz, peak {:.3} -> {}",
                spectrum.center_frequency * 1e-12,
                spectrum.measured_fwhm().unwrap_or(f64::NAN) * 1e-9,
                spectrum.peak_intensity(),
                path.display()
            );
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run()
}
