use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hwlab::experiment::{resolve, run_config, ExperimentConfig, ExperimentKind, Overrides, THREADS_ENV};

#[derive(Parser)]
#[command(name = "hwlab", version, about = "Many-server queue and diffusion-limit experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the N-server queue and write scaled sample paths
    SimulateQueue(Common),
    /// Simulate the limiting diffusion and write sample paths
    SimulateDiffusion(Common),
    /// Estimate stationary laws of scalar functionals
    Stationary(Common),
    /// Compare queue and limit laws over a list of server counts
    Sweep(Common),
    /// Check a service law against the modeling assumptions
    VerifyDist(Common),
    /// Rebuild the occupancy from the job log and compare
    Audit(Common),
}

#[derive(Args)]
struct Common {
    /// experiment file (TOML)
    #[arg(long)]
    config: PathBuf,
    /// output directory [default: ./out]
    #[arg(long)]
    out: Option<PathBuf>,
    /// master seed, replacing the one in the file
    #[arg(long)]
    seed: Option<u64>,
    /// worker threads
    #[arg(long, env = THREADS_ENV)]
    threads: Option<usize>,
    /// enforce the thresholds in [checks]; exit 1 if any fails
    #[arg(long)]
    check: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = match cli.command {
        Command::SimulateQueue(a) => (ExperimentKind::SimulateQueue, a),
        Command::SimulateDiffusion(a) => (ExperimentKind::SimulateDiffusion, a),
        Command::Stationary(a) => (ExperimentKind::Stationary, a),
        Command::Sweep(a) => (ExperimentKind::Sweep, a),
        Command::VerifyDist(a) => (ExperimentKind::VerifyDist, a),
        Command::Audit(a) => (ExperimentKind::Audit, a),
    };
    let overrides = Overrides { seed: args.seed, threads: args.threads, out: args.out, check: args.check };
    let outcome = ExperimentConfig::load(&args.config)
        .and_then(|c| {
            if c.kind != kind {
                return Err(hwlab::Error::Usage(format!("{} describes a `{}` experiment, not `{kind}`", args.config.display(), c.kind)));
            }
            resolve(c, &overrides)
        })
        .and_then(|c| run_config(&c));
    match outcome {
        Ok(outcome) => {
            for c in outcome.checks.iter().filter(|c| !c.passed) {
                eprintln!("check failed: {} = {} (threshold {})", c.name, c.value, c.threshold);
            }
            println!("{} ({}, {:.2}s)", outcome.out_dir.display(), &outcome.hash[..12], outcome.wall_seconds);
            if outcome.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
