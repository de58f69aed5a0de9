//! Command line driver for the 2D cubic Dirac simulator.

mod commands;
mod manifest;

use clap::{Parser, Subcommand};
use commands::{SweepAxis, EXIT_NUMERIC, EXIT_USAGE};
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "dirac2d",
    version,
    about = "Pseudospectral simulator and diagnostics for the 2D cubic Dirac equation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the algebraic / commutator / pairing identity suite.
    CheckIdentities {
        /// Grid size for the commutator checks.
        #[arg(long, default_value_t = 128)]
        n: usize,
        /// Deliberately corrupt part of the representation (testing hook).
        #[arg(long)]
        corrupt: Option<String>,
    },
    /// Integrate a configured problem and write all artifacts.
    Run {
        /// Path to a key = value config file.
        config: PathBuf,
        /// Output root (overrides DIRAC2D_OUT).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// dt-halving self-convergence study (three runs).
    Convergence { config: PathBuf },
    /// Run a parameter sweep concurrently, one subdirectory per value.
    Sweep {
        config: PathBuf,
        /// Sweep axis: epsilon, mass or delta.
        #[arg(long)]
        axis: String,
        /// Comma-separated list of values.
        #[arg(long, value_delimiter = ',')]
        values: Vec<f64>,
        /// Worker count (default: all cores).
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recompute the scattering report from a finished run directory.
    ScatterReport { run_dir: PathBuf },
}

fn dispatch(cli: Cli) -> anyhow::Result<i32> {
    match cli.command {
        Command::CheckIdentities { n, corrupt } => {
            commands::cmd_check_identities(n, corrupt.as_deref())
        }
        Command::Run { config, out } => commands::cmd_run(&config, out.as_deref()),
        Command::Convergence { config } => commands::cmd_convergence(&config),
        Command::Sweep {
            config,
            axis,
            values,
            workers,
            out,
        } => {
            let Some(axis) = SweepAxis::parse(&axis) else {
                eprintln!("unknown sweep axis `{axis}` (expected epsilon, mass or delta)");
                return Ok(EXIT_USAGE);
            };
            commands::cmd_sweep(&config, axis, &values, workers, out.as_deref())
        }
        Command::ScatterReport { run_dir } => commands::cmd_scatter_report(&run_dir),
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are not usage errors.
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    match dispatch(cli) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            // Config / IO problems are usage errors; anything numeric maps
            // onto its own code before reaching here.
            let usage = e.downcast_ref::<dirac2d::Error>().map_or(true, |de| {
                matches!(
                    de,
                    dirac2d::Error::ConfigParse { .. }
                        | dirac2d::Error::ConfigInvalid(_)
                        | dirac2d::Error::Io(_)
                        | dirac2d::Error::UnknownProfile(_)
                )
            });
            std::process::exit(if usage { EXIT_USAGE } else { EXIT_NUMERIC });
        }
    }
}
