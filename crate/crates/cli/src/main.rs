//! Command-line front end for dimerlab.

mod analyze;
mod config;
mod enumerate;
mod exact;
mod output;
mod sample;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::output::CliError;

#[derive(Parser)]
#[command(name = "dimerlab", version, about = "Exact and Monte Carlo computations for square-lattice dimers")]
struct Cli {
    /// Worker threads; defaults to the number of cores.
    #[arg(long, global = true, env = "DIMERLAB_WORKERS")]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fermi data, free energy, densities, correlations and variance profiles.
    Exact {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Brute-force enumeration oracles for L <= 4.
    Enumerate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides "L" from the config.
        #[arg(long = "L", alias = "l")]
        l: Option<usize>,
    },
    /// Run Metropolis chains.
    Sample {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides "seed" from the config.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 1)]
        chains: u64,
        /// Continue every chain from its checkpoint in the output directory.
        #[arg(long)]
        resume: bool,
        /// Stop at this sweep, leaving a resumable run.
        #[arg(long)]
        stop_after: Option<u64>,
    },
    /// Fit nu and A and check A = nu.
    Analyze {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.workers {
        if n == 0 {
            eprintln!("error: --workers must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let result = match &cli.command {
        Command::Exact { config, out } => exact::run(config, out),
        Command::Enumerate { config, out, l } => enumerate::run(config, out, *l),
        Command::Sample { config, out, seed, chains, resume, stop_after } => sample::run(
            config,
            out,
            &sample::SampleArgs { seed: *seed, chains: *chains, resume: *resume, stop_after: *stop_after },
        ),
        Command::Analyze { config, out } => analyze::run(config, out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if let CliError::Lib(dimerlab::Error::InsufficientStatistics { have, need }) = &e {
                let factor = (*need as f64 / have.max(1e-9)).ceil();
                eprintln!("hint: need at least {need} effective samples; run about {factor:.0}x more sweeps or chains");
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
