//! `qlin`: covariance-level analysis of linear quantum systems under
//! classical feedback. Log verbosity follows the `RUST_LOG` environment
//! variable (`error` by default).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use qlin_cli::commands;

#[derive(Parser)]
#[command(
    name = "qlin",
    version,
    about = "Gaussian quantum systems under classical feedback"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve for the steady-state covariance and judge its separability.
    Analyze {
        /// Scenario TOML file.
        config: PathBuf,
    },
    /// Propagate the configured initial covariance and write the trajectory CSV.
    Simulate {
        /// Scenario TOML file.
        config: PathBuf,
    },
    /// Randomized verification that classical control never creates entanglement.
    Verify {
        /// Ensemble seed.
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Number of random closed loops to draw.
        #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
        trials: u64,
        /// Fault injection: negate separability margins to force a failure.
        #[arg(long, hide = true, default_value_t = false)]
        flip_separability_sign: bool,
    },
    /// Run the built-in two-cavity reference scenario and check its known results.
    ExamplePaper {
        /// Output directory for the CSV curves and summary.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("error")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Analyze { config } => commands::cmd_analyze(&config),
        Command::Simulate { config } => commands::cmd_simulate(&config),
        Command::Verify {
            seed,
            trials,
            flip_separability_sign,
        } => commands::cmd_verify(seed, trials, flip_separability_sign),
        Command::ExamplePaper { out } => commands::cmd_example_paper(&out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code as u8)
        }
    }
}
