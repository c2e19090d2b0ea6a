//! Command-line front end: run experiment sweeps, batch-denoise
//! channel files, and print closed-form operating points.

use std::path::PathBuf;
use std::process::ExitCode;

use beamdenoise::config::load_config;
use beamdenoise::csvout::emit_csv;
use beamdenoise::experiments::run_experiment;
use beamdenoise_core::channel::{load_channels, save_channels};
use beamdenoise_core::denoiser::{denoise, DenoiserConfig};
use beamdenoise_core::numerics::{inverse_unitary_dft, unitary_dft};
use beamdenoise_core::theory::predict;
use beamdenoise_core::{Error, Result};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "beamdenoise",
    version,
    about = "Blind beamspace channel denoising: experiments, batch denoising, closed forms"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Runs a configured experiment sweep and writes a CSV of results.
    Run {
        /// Path of the `key = value` configuration file.
        #[arg(long)]
        config: PathBuf,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
        /// Master seed, overriding the BEAMDENOISE_SEED environment
        /// variable and the configured value.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads; defaults to all cores. The output bytes do
        /// not depend on this.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Batch-denoises every record of a channel file.
    Denoise {
        /// Input channel file (binary, or CSV by extension).
        #[arg(long = "in")]
        input: PathBuf,
        /// Output channel file; the extension picks the format.
        #[arg(long)]
        out: PathBuf,
        /// False-alarm cost of the detector.
        #[arg(long = "cost-c", default_value_t = 5.0)]
        cost_c: f64,
    },
    /// Prints the closed-form operating point for given parameters.
    Theory {
        /// Per-element noise variance.
        #[arg(long)]
        e0: f64,
        /// Per-element average SNR, linear.
        #[arg(long)]
        snr: f64,
        /// Activity rate.
        #[arg(long)]
        q: f64,
        /// False-alarm cost of the detector.
        #[arg(long = "cost-c", default_value_t = 5.0)]
        cost_c: f64,
    },
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config, out, seed, threads } => {
            let mut spec = load_config(&config)?;
            if let Some(seed) = resolve_seed(seed)? {
                spec.seed = seed;
            }
            let rows = run_experiment(&spec, threads)?;
            emit_csv(&rows, &out)
        }
        Command::Denoise { input, out, cost_c } => {
            let config = DenoiserConfig { cost_c };
            // Records are antenna-domain; the detector works per
            // beamspace bin, so transform, denoise, transform back.
            let denoised = load_channels(&input)?
                .iter()
                .map(|record| {
                    let cleaned = denoise(&unitary_dft(record), &config)?;
                    Ok(inverse_unitary_dft(&cleaned.estimate))
                })
                .collect::<Result<Vec<_>>>()?;
            save_channels(&out, &denoised)
        }
        Command::Theory { e0, snr, q, cost_c } => {
            let point = predict(e0, snr, q, cost_c)?;
            println!("threshold = {}", point.threshold);
            println!("p_d = {}", point.p_d);
            println!("p_fa = {}", point.p_fa);
            println!("mse = {}", point.mse);
            Ok(())
        }
    }
}

/// Seed precedence: the `--seed` flag wins, then the BEAMDENOISE_SEED
/// environment variable, then the configured value (`None` here).
fn resolve_seed(flag: Option<u64>) -> Result<Option<u64>> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var("BEAMDENOISE_SEED") {
        Ok(text) => text.trim().parse().map(Some).map_err(|_| {
            Error::invalid(format!(
                "BEAMDENOISE_SEED must be an unsigned integer, got {text:?}"
            ))
        }),
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(Error::invalid(format!("BEAMDENOISE_SEED is unreadable: {e}"))),
    }
}
