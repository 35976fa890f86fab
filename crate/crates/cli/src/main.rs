use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{CommandFactory, Parser};
use formation_cli::{
    apply_overrides, load_scenario, metrics_text, parse_horizon, parse_horizon_list, run_command, sweep, sweep_table,
    CliError, Overrides,
};

/// Runs a formation scenario and writes its trajectory, metrics and event log.
#[derive(Debug, Parser)]
#[command(name = "formation", version)]
struct Args {
    /// Scenario file.
    #[arg(long)]
    scenario: PathBuf,
    /// Sensing horizon in metres, or `inf`.
    #[arg(long, value_parser = parse_horizon)]
    horizon: Option<f64>,
    /// Tick length in seconds.
    #[arg(long)]
    dt: Option<f64>,
    /// Seed for randomly placed agents.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Comma-separated horizons; runs one simulation per horizon and
    /// prints a report table instead of writing run artifacts.
    #[arg(long)]
    sweep: Option<String>,
}

fn execute(args: &Args, horizons: Option<Vec<f64>>) -> Result<(), CliError> {
    let overrides = Overrides {
        horizon: args.horizon,
        dt: args.dt,
        seed: args.seed,
    };
    let config = apply_overrides(load_scenario(&args.scenario)?, &overrides)?;
    match horizons {
        Some(horizons) => {
            let table = sweep_table(&sweep(&config, &horizons));
            fs::create_dir_all(&args.out).map_err(|source| CliError::Write {
                path: args.out.clone(),
                source,
            })?;
            let path = args.out.join("sweep.csv");
            fs::write(&path, &table).map_err(|source| CliError::Write { path, source })?;
            print!("{table}");
        }
        None => {
            let metrics = run_command(&config, &args.out)?;
            print!("{}", metrics_text(&metrics));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    let horizons = match args.sweep.as_deref().map(parse_horizon_list).transpose() {
        Ok(h) => h,
        Err(e) => Args::command().error(ErrorKind::ValueValidation, format!("--sweep: {e}")).exit(),
    };
    match execute(&args, horizons) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
