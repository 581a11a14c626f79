use awg_entangle::cli::{
    cmd_analyze, cmd_design, cmd_reproduce_paper, cmd_simulate, cmd_spectra, load_config, CliError,
};
use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

/// AWG path-entanglement source: design, simulation and analysis.
#[derive(Parser)]
#[command(version)]
struct Args {
    /// TOML config file; omitted sections take preset values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Preset to start from: "paper" or "desk".
    #[arg(long, global = true)]
    preset: Option<String>,
    /// Override a config key, e.g. --set run.seed=7
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE", global = true)]
    overrides: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Channel spacing, dispersion, tolerances and port table.
    Design {
        #[arg(long)]
        json: bool,
    },
    /// Port transmission spectra and joint spectral intensities as CSV.
    Spectra {
        #[arg(long, default_value = "spectra")]
        out_dir: PathBuf,
    },
    /// Record-level Monte Carlo of the coincidence experiment.
    Simulate {
        #[arg(long, default_value = "records.csv")]
        out: PathBuf,
    },
    /// Coincidence map, fringe fits, slices and CHSH from a records CSV.
    Analyze {
        #[arg(long)]
        records: PathBuf,
        /// Report JSON path; printed to stdout when omitted.
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long)]
        map: Option<PathBuf>,
    },
    /// Full pipeline; uses the desk preset unless told otherwise.
    ReproducePaper {
        #[arg(long, default_value = "paper-run")]
        out_dir: PathBuf,
    },
}

fn run(args: Args) -> Result<(), CliError> {
    let preset = match (&args.command, &args.preset, &args.config) {
        (Command::ReproducePaper { .. }, None, None) => Some("desk".to_string()),
        _ => args.preset.clone(),
    };
    let config = load_config(args.config.as_deref(), preset.as_deref(), &args.overrides)?;
    match args.command {
        Command::Design { json: true } => json(&cmd_design(&config)?),
        Command::Design { json: false } => print!("{}", cmd_design(&config)?),
        Command::Spectra { out_dir } => json(&cmd_spectra(&config, &out_dir)?),
        Command::Simulate { out } => println!("{}", cmd_simulate(&config, &out)?),
        Command::Analyze {
            records,
            report,
            map,
        } => {
            let out = cmd_analyze(&records, &config, report.as_deref(), map.as_deref())?;
            if report.is_none() {
                json(&out);
            } else {
                let r = &out.report;
                let chsh = match &r.chsh {
                    Some(c) => format!("{:.3} ± {:.3}", c.s, c.s_sigma),
                    None => "n/a (settings missing)".into(),
                };
                println!(
                    "V = {:.4} ± {:.4} (subtracted {:.4} ± {:.4}), |S| = {chsh}, Bell violation: {}",
                    r.fit.v, r.fit.v_sigma, r.fit_subtracted.v, r.fit_subtracted.v_sigma, r.bell_violation
                );
            }
        }
        Command::ReproducePaper { out_dir } => println!("{}", cmd_reproduce_paper(&config, &out_dir)?),
    }
    Ok(())
}

fn json<T: serde::Serialize>(value: &T) {
    println!("{}", serde_json::to_string_pretty(value).expect("report serializes"));
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
