//! gaplab: batch front-end for the cocycle-walk laboratory.
//!
//! Subcommands: simulate | spectral | verify | list-scenarios.  All outputs
//! are deterministic given (config, seed) except `run.log`; exit codes are
//! 0 ok, 1 acceptance failure, 2 config error, 3 numerical non-convergence.

mod commands;
mod config;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gaplab_core::verify::DEFAULT_SEED;
use gaplab_core::{Error, Result};

use config::{Overrides, RunConfig};

#[derive(Parser)]
#[command(name = "gaplab", version, about = "stationary walks of toral and nil automorphisms: simulation and spectral diagnostics")]
struct Cli {
    /// Worker threads (default: available parallelism).  Results do not
    /// depend on this value.
    #[arg(long, global = true, env = "GAPLAB_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a path ensemble; write summary.json and trajectory CSVs.
    Simulate(RunArgs),
    /// Frequency-space diagnostics; write spectral.json.
    Spectral(RunArgs),
    /// Run the acceptance criteria; write verify.json.
    Verify(VerifyArgs),
    /// List the built-in scenarios.
    ListScenarios,
}

#[derive(Args)]
struct RunArgs {
    /// JSON config file; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Scenario id (see list-scenarios).
    #[arg(long)]
    scenario: Option<String>,

    /// Steps per path.
    #[arg(long)]
    steps: Option<usize>,

    /// Number of paths in the ensemble.
    #[arg(long)]
    paths: Option<usize>,

    /// Base seed.  Mandatory: there is no wall-clock fallback.
    #[arg(long)]
    seed: Option<u64>,

    /// Frequency-ball radius for spectral truncations.
    #[arg(long)]
    ball_radius: Option<f64>,

    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Base seed for the criteria (fixed default, not wall clock).
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,

    /// Output directory for verify.json.
    #[arg(long, default_value = "out")]
    out: PathBuf,

    /// Reduced sample sizes; loosened statistical criteria are demoted to
    /// advisory in the report.
    #[arg(long)]
    quick: bool,
}

impl RunArgs {
    fn load(&self) -> Result<RunConfig> {
        let mut cfg = RunConfig::load(self.config.as_deref())?;
        cfg.apply(&Overrides {
            scenario: self.scenario.clone(),
            steps: self.steps,
            paths: self.paths,
            seed: self.seed,
            ball_radius: self.ball_radius,
            out: self.out.clone(),
        })?;
        Ok(cfg)
    }
}

fn init_threads(threads: Option<usize>) {
    let n = threads
        .filter(|&t| t > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map(|p| p.get()).unwrap_or(1));
    // A second init (e.g. under `cargo test`) keeps the existing pool; the
    // results are thread-count independent anyway.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Numerical(_) => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_threads(cli.threads);
    let outcome: Result<bool> = match &cli.cmd {
        Cmd::Simulate(args) => args.load().and_then(|cfg| commands::cmd_simulate(&cfg)).map(|()| true),
        Cmd::Spectral(args) => args.load().and_then(|cfg| commands::cmd_spectral(&cfg)).map(|()| true),
        Cmd::Verify(args) => commands::cmd_verify(&args.out, args.seed, args.quick),
        Cmd::ListScenarios => {
            commands::cmd_list_scenarios();
            Ok(true)
        }
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
