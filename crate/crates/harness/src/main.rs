use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cfran_harness::{emit_csv, parse_config, run_sweep, HarnessError};

#[derive(Parser)]
#[command(
    name = "cfran",
    about = "Batch experiments for pilot/analog-combiner design in one-bit cell-free C-RAN channel estimation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the sweep described by a config file and write records to CSV.
    Run {
        /// Path to the key=value experiment config.
        #[arg(long)]
        config: PathBuf,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
        /// Override the config's scheme (fully-random, combiner-opt, pilot-opt, joint).
        #[arg(long)]
        scheme: Option<String>,
        /// Override the config's base RNG seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the per-placement empirical trial count.
        #[arg(long = "empirical-trials")]
        empirical_trials: Option<usize>,
    },
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Run {
            config,
            out,
            scheme,
            seed,
            empirical_trials,
        } => {
            let mut spec = parse_config(&config)?;
            if let Some(raw) = scheme {
                spec.scheme = raw
                    .parse()
                    .map_err(|e| HarnessError::Config(format!("--scheme: {e}")))?;
            }
            if let Some(s) = seed {
                spec.base.rng_seed = s;
            }
            if let Some(k) = empirical_trials {
                spec.n_channel_trials = k;
            }
            let records = run_sweep(&spec)?;
            emit_csv(&records, &out)?;
            log::info!("wrote {} records to {}", records.len(), out.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
