use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use niqs::cli::{self, RunOptions, EXIT_INVALID};

/// Nondistortion interrogation of quantum systems: decide feasibility,
/// build the success projector, optimize the success probability, and
/// verify it all by Monte Carlo simulation.
#[derive(Parser)]
#[command(name = "niqs", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Model file (JSON).
    #[arg(long)]
    model: PathBuf,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report format.
    #[arg(long, default_value = "json", value_parser = ["json", "text"])]
    format: String,
    /// RNG seed for the witness search and simulations.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Number of random starts in the witness search.
    #[arg(long, default_value_t = 48)]
    starts: usize,
    /// Witness acceptance threshold (Frobenius residual).
    #[arg(long = "tol-witness", default_value_t = 1e-8)]
    tol_witness: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Decide whether a nondistortion interrogation is possible.
    Analyze {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Build the success projector and report the success amplitude.
    Construct {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Maximize the success probability over the probe split.
    Optimize {
        #[command(flatten)]
        common: CommonArgs,
        /// Number of |alpha| grid points on [0, 1).
        #[arg(long, default_value_t = 201)]
        grid: usize,
    },
    /// Monte Carlo interrogation runs, compared against the analytic
    /// outcome distribution.
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
        /// Number of trials per run.
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
    },
    /// Write a built-in example model file.
    Example {
        /// One of: mach-zehnder-atom, absorber, identity.
        name: String,
        /// Write the model here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn options(common: &CommonArgs) -> RunOptions {
    RunOptions {
        seed: common.seed,
        starts: common.starts,
        tol_witness: common.tol_witness,
        ..RunOptions::default()
    }
}

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("NIQS_THREADS") {
        if let Ok(k) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
        }
    }

    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Analyze { common } => {
            cli::cmd_analyze(&common.model, &options(common)).map(|r| (r, common.clone()))
        }
        Command::Construct { common } => {
            cli::cmd_construct(&common.model, &options(common)).map(|r| (r, common.clone()))
        }
        Command::Optimize { common, grid } => {
            let mut opts = options(common);
            opts.alpha_grid = *grid;
            cli::cmd_optimize(&common.model, &opts).map(|r| (r, common.clone()))
        }
        Command::Simulate { common, trials } => {
            let mut opts = options(common);
            opts.trials = *trials;
            cli::cmd_simulate(&common.model, &opts).map(|r| (r, common.clone()))
        }
        Command::Example { name, out } => {
            return match cli::cmd_example(name) {
                Ok((doc, code)) => {
                    let _ = code;
                    match cli::emit(&doc, "json", out.as_ref()) {
                        Ok(()) => ExitCode::SUCCESS,
                        Err(e) => {
                            eprintln!("error: {e}");
                            ExitCode::from(EXIT_INVALID as u8)
                        }
                    }
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(EXIT_INVALID as u8)
                }
            };
        }
    };

    match outcome {
        Ok(((doc, code), common)) => {
            if let Err(e) = cli::emit(&doc, &common.format, common.out.as_ref()) {
                eprintln!("error: {e}");
                return ExitCode::from(EXIT_INVALID as u8);
            }
            ExitCode::from(code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_INVALID as u8)
        }
    }
}
