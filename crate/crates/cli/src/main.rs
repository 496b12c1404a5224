use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod checks;
mod error;
mod fit_one;
mod input;
mod presets;
mod sweep;

use error::CliResult;

#[derive(Parser)]
#[command(name = "dce", version, about = "Deep channel estimation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte Carlo sweep and write results.csv, summary.csv and manifest.json.
    Sweep {
        #[command(flatten)]
        source: Source,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Base seed; overrides run.seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads (results do not depend on this).
        #[arg(long, env = "DCE_THREADS")]
        threads: Option<usize>,
        /// Suppress progress and the summary table.
        #[arg(long, short)]
        quiet: bool,
    },
    /// Compare decoder gradients against central finite differences.
    Gradcheck {
        /// Architecture: small (l=3, k=4, out 4x8x8), six_layer or wide.
        #[arg(long, default_value = "small")]
        arch: String,
        #[arg(long, default_value_t = 1e-5)]
        tolerance: f64,
        /// Finite-difference step.
        #[arg(long, default_value_t = 1e-5)]
        step: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Fit the decoder to one received grid and report its loss trace and NMSE.
    FitOne {
        #[command(flatten)]
        source: Source,
        /// Estimator id; defaults to the first dce estimator.
        #[arg(long)]
        estimator: Option<String>,
        /// SNR point from noise.snr_db; defaults to the first.
        #[arg(long)]
        snr: Option<f64>,
        /// SIR point from contamination.sir_db; defaults to the first.
        #[arg(long)]
        sir: Option<f64>,
        /// Pilot length from grid.n_p; defaults to the first.
        #[arg(long)]
        n_p: Option<usize>,
        #[arg(long, default_value_t = 0)]
        trial: usize,
        #[arg(long, default_value_t = 0)]
        user: usize,
        #[arg(long)]
        seed: Option<u64>,
        /// Write the per-epoch loss as `epoch,loss` CSV.
        #[arg(long)]
        dump_loss: Option<PathBuf>,
    },
    /// Print decoder weight counts for the preset architectures and check them.
    Tables {
        /// 1 (single antenna) or 2 (64 antennas); both when omitted.
        #[arg(long)]
        table: Option<u8>,
    },
    /// List the shipped presets, or print one as JSON.
    Presets { name: Option<String> },
}

#[derive(Args)]
struct Source {
    /// Config or manifest JSON file.
    config: Option<PathBuf>,
    /// Use a shipped preset instead of a file.
    #[arg(long)]
    preset: Option<String>,
    /// Override a config value, e.g. `--set grid.m=16` (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl Source {
    fn load(&self) -> CliResult<dce_core::bench::ExperimentConfig> {
        input::load(self.config.as_deref(), self.preset.as_deref(), &self.overrides)
    }
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Sweep {
            source,
            out,
            seed,
            threads,
            quiet,
        } => {
            let cfg = source.load()?;
            sweep::run(
                cfg,
                &sweep::SweepOptions {
                    out,
                    seed,
                    threads,
                    quiet,
                },
            )
        }
        Command::Gradcheck {
            arch,
            tolerance,
            step,
            seed,
        } => checks::gradcheck(&arch, tolerance, seed, step),
        Command::FitOne {
            source,
            estimator,
            snr,
            sir,
            n_p,
            trial,
            user,
            seed,
            dump_loss,
        } => {
            let cfg = source.load()?;
            fit_one::run(
                cfg,
                &fit_one::FitOneOptions {
                    estimator,
                    snr_db: snr,
                    sir_db: sir,
                    n_p,
                    trial,
                    user,
                    seed,
                    dump_loss,
                },
            )
        }
        Command::Tables { table } => checks::tables(table),
        Command::Presets { name: None } => {
            for name in presets::names() {
                println!("{name}");
            }
            Ok(())
        }
        Command::Presets { name: Some(name) } => {
            let text = presets::lookup(&name)
                .ok_or_else(|| error::CliError::Config(format!("preset: unknown preset {name:?}")))?;
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
