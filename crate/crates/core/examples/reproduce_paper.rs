//! The whole pipeline on the ten-minute desk preset: design, spectra,
//! simulation and analysis, with every output under one directory.
//!
//! ```text
//! cargo run --release --example reproduce_paper -- /tmp/paper-run
//! ```

use awg_entangle::cli::cmd_reproduce_paper;
use awg_entangle::config::RunConfig;
use std::error::Error;
use std::path::PathBuf;

pub fn run() -> Result<(), Box<dyn Error>> {
    let out: PathBuf = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("awg-entangle-paper-run"));
    let result = cmd_reproduce_paper(&RunConfig::desk(), &out)?;
    println!("{result}");
    println!("outputs in {}", out.display());
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run()
}
