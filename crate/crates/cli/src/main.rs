use clap::{Parser, Subcommand};
use rcbf_cli::commands::{self, RunArgs};
use rcbf_cli::CliError;
use std::path::PathBuf;
use std::process::ExitCode;

/// Robust multicell coordinated beamforming experiments.
///
/// Exit codes: 0 success, 2 configuration or input error, 3 I/O error,
/// 4 numerical failure.
#[derive(Parser)]
#[command(name = "rcbf", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte Carlo experiment from a configuration file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides `output_path`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Base seed (overrides `base_seed`).
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads (default: available parallelism).
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Solve a single scenario file and write the solution record.
    Solve {
        scenario: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Seed of the randomization fallback.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Check a solution's beamformers against sampled channel errors.
    Verify {
        solution: PathBuf,
        scenario: PathBuf,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the standard-form conic problems of a scenario.
    DumpConic {
        scenario: PathBuf,
        /// Directory for one file per sub-problem (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run { config, out, seed, threads } => {
            let result = commands::run(&RunArgs { config, out, seed, threads })?;
            print!("{}", commands::format_aggregates(&result.aggregates));
            eprintln!("results written to {}", result.output_dir.display());
        }
        Command::Solve { scenario, out, seed } => {
            let sol = commands::solve(&scenario, out.as_deref(), seed)?;
            if sol.status == "numerical-failure" {
                return Err(CliError::Numerical("the solver did not converge".into()));
            }
        }
        Command::Verify { solution, scenario, samples, seed, out } => {
            let report = commands::verify(&solution, &scenario, samples, seed, out.as_deref())?;
            let failed = report.users.iter().filter(|u| !u.pass).count();
            eprintln!("{} of {} users meet their target", report.users.len() - failed, report.users.len());
        }
        Command::DumpConic { scenario, out } => {
            commands::dump_conic(&scenario, out.as_deref())?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
