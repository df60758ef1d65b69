use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use swarmsim_cli::run::RunOverrides;
use swarmsim_cli::{convergence, run, sweep, CliError};
use swarmsim_core::SolverMode;

/// Deterministic simulator for a two-phase, age-structured bacterial swarm
/// colony with memory-gated nonlinear diffusion.
#[derive(Parser)]
#[command(name = "swarmsim", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a configuration and write the per-step CSV report.
    Run {
        /// Path to a `section.key = value` configuration file.
        config: PathBuf,
        /// Override the coupling mode (direct | picard).
        #[arg(long)]
        mode: Option<String>,
        /// Override the snapshot stride (0 disables snapshots).
        #[arg(long)]
        dump_every: Option<u64>,
        /// Override the worker count for per-age-level solves.
        #[arg(long)]
        threads: Option<usize>,
        /// Run twice and require byte-identical reports.
        #[arg(long)]
        seed_check: bool,
    },
    /// Check every model hypothesis and report violations.
    Validate { config: PathBuf },
    /// Run the Cartesian product of parameter overrides.
    Sweep { spec: PathBuf },
    /// Refinement study: halve (dt, da, dx, dy) together and estimate orders.
    Convergence {
        config: PathBuf,
        /// Number of refinement levels (>= 2).
        #[arg(long, default_value_t = 3)]
        levels: u32,
    },
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run {
            config,
            mode,
            dump_every,
            threads,
            seed_check,
        } => {
            let mode = match mode.as_deref() {
                None => None,
                Some("direct") => Some(SolverMode::Direct),
                Some("picard") => Some(SolverMode::Picard),
                Some(other) => {
                    return Err(CliError::Other(format!(
                        "--mode must be `direct` or `picard`, got `{other}`"
                    )))
                }
            };
            run::cmd_run(
                &config,
                &RunOverrides {
                    mode,
                    dump_every,
                    threads,
                },
                seed_check,
            )
        }
        Command::Validate { config } => run::cmd_validate(&config),
        Command::Sweep { spec } => sweep::cmd_sweep(&spec),
        Command::Convergence { config, levels } => {
            convergence::cmd_convergence(&config, levels)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
