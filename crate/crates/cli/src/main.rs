//! Command-line front end: decide whether multipartite entanglement is
//! detectable from far-field light observables.
//!
//! Exit codes: 0 when the requested computation ran to completion (whatever
//! the physical verdict), 1 for usage/config errors, 2 for internal
//! numerical failures (including failed verification suites).

mod commands;
mod config;
mod output;
mod verify;

use std::path::PathBuf;

use anyhow::anyhow;
use clap::{Args, Parser, Subcommand};

use commands::{Failure, RunSettings};
use config::Experiment;
use output::Provenance;

#[derive(Parser)]
#[command(
    name = "lightwitness",
    version,
    about = "Detect multipartite entanglement of quantum emitters from far-field light"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the witness at the configured viewing direction
    Witness(CommonArgs),
    /// Map the witness over the configured grid of viewing directions
    Scan(CommonArgs),
    /// Find the white-noise level where detection is lost
    Threshold(CommonArgs),
    /// Run the self-check suites
    Verify(VerifyArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Experiment description (TOML)
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides the config's run.out)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed recorded in output provenance (overrides run.seed)
    #[arg(long)]
    seed: Option<u64>,
    /// Detection verdict threshold: W < -tolerance counts as detection
    /// (overrides run.tolerance)
    #[arg(long)]
    tolerance: Option<f64>,
    /// Format of the scan field file (overrides run.format)
    #[arg(long, value_parser = ["csv", "json"])]
    format: Option<String>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Additionally parse and build this config as an extra suite
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seed for the random draws (pass/fail must not depend on it)
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn with_experiment<F>(args: &CommonArgs, run_cmd: F) -> Result<(), Failure>
where
    F: FnOnce(&Experiment, &RunSettings, &Provenance) -> Result<(), Failure>,
{
    let (config, exp, bytes) = commands::load_experiment(&args.config)?;
    let settings = RunSettings {
        seed: args.seed.unwrap_or(config.run.seed),
        tolerance: args.tolerance.unwrap_or(config.run.tolerance),
        p_resolution: config.run.p_resolution,
        out_dir: args
            .out
            .clone()
            .or_else(|| config.run.out.as_ref().map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(".")),
        format: args
            .format
            .clone()
            .unwrap_or_else(|| config.run.format.clone()),
    };
    if !(settings.tolerance > 0.0) || !settings.tolerance.is_finite() {
        return Err(Failure::usage(anyhow!(
            "--tolerance must be positive and finite, got {}",
            settings.tolerance
        )));
    }
    let provenance = Provenance::new(&bytes, settings.seed);
    run_cmd(&exp, &settings, &provenance)
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Witness(args) => with_experiment(&args, commands::cmd_witness),
        Command::Scan(args) => with_experiment(&args, commands::cmd_scan),
        Command::Threshold(args) => with_experiment(&args, commands::cmd_threshold),
        Command::Verify(args) => verify::cmd_verify(args.seed, args.config.as_deref()),
    }
}

fn main() {
    // Restore the default SIGPIPE disposition so that piping the output into
    // a pager that exits early ends the process quietly instead of
    // panicking on a closed stdout.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Err(f) = run(cli) {
        eprintln!("error: {:#}", f.error);
        std::process::exit(f.exit_code);
    }
}
