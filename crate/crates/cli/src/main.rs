mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::ConfigErrors;
use crate::error::CliError;

/// Numerical laboratory for prescribed mean curvature flow of graphs in warped spacetimes.
#[derive(Parser)]
#[command(name = "grwflow", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the flow described by a config file.
    Run { config: PathBuf },
    /// Check the discrete identities on a ladder of grid sizes.
    CheckIdentities {
        config: PathBuf,
        /// Grid sizes, at least three, coarse to fine.
        #[arg(long, value_delimiter = ',', default_values_t = [32, 64, 128])]
        ladder: Vec<usize>,
    },
    /// Check the geometry of the initial graph.
    CheckGeometry { config: PathBuf },
    /// Fit the decay of sup|H - Hcal| in a run directory.
    Report {
        dir: PathBuf,
        #[arg(long, default_value_t = 1e-5)]
        threshold: f64,
    },
    /// Resume a run from a checkpoint file.
    Restart { checkpoint: PathBuf },
}

fn init_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("GRWFLOW_THREADS") else {
        return Ok(());
    };
    let n: usize = match raw.trim().parse() {
        Ok(n) if n >= 1 => n,
        _ => return Err(ConfigErrors(vec![format!("GRWFLOW_THREADS: expected a positive integer, got '{raw}'")]).into()),
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| ConfigErrors(vec![format!("GRWFLOW_THREADS: {e}")]))?;
    if n == 1 {
        grwflow::par::set_execution(grwflow::par::Execution::Sequential);
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    init_threads()?;
    match cli.command {
        Command::Run { config } => commands::cmd_run(&config),
        Command::CheckIdentities { config, ladder } => commands::cmd_check_identities(&config, ladder),
        Command::CheckGeometry { config } => commands::cmd_check_geometry(&config),
        Command::Report { dir, threshold } => commands::cmd_report(&dir, threshold),
        Command::Restart { checkpoint } => commands::cmd_restart(&checkpoint),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("grwflow: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
