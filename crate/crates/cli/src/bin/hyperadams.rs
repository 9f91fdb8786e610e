use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use anyhow::Context;
use hyperadams_cli::{converge, load_config, run, RunError, RunOptions, RunOutcome};

#[derive(Parser)]
#[command(
    name = "hyperadams",
    version,
    about = "Numerical experiments for the critical Adams inequality on hyperbolic space"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write <experiment>.csv and <experiment>.json
    Run {
        config: PathBuf,
        /// output directory, overriding the config's `output`
        #[arg(long)]
        out: Option<PathBuf>,
        /// worker threads (falls back to HYPERADAMS_THREADS)
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Run at n, 2n and 4n nodes and fit the observed order
    Converge {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        threads: Option<usize>,
    },
}

fn execute(cli: Cli) -> anyhow::Result<RunOutcome> {
    let (config, out, threads, study) = match cli.command {
        Command::Run { config, out, threads } => (config, out, threads, false),
        Command::Converge { config, out, threads } => (config, out, threads, true),
    };
    let opts = RunOptions { out_dir: out, threads };
    let cfg = load_config(&config).with_context(|| format!("config {}", config.display()))?;
    let outcome = if study { converge(&cfg, &opts) } else { run(&cfg, &opts) };
    outcome.with_context(|| format!("experiment {}", cfg.experiment.name()))
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(outcome) => {
            println!("{}\n{}", outcome.csv.display(), outcome.json.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("hyperadams: {e:#}");
            ExitCode::from(e.downcast_ref::<RunError>().map_or(1, RunError::exit_code))
        }
    }
}
