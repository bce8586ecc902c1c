use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use chflow::app::{cmd_check_mesh, cmd_compare, cmd_jko1d, cmd_run, AppError};

/// Two-phase Cahn-Hilliard finite-volume simulator.
#[derive(Parser)]
#[command(name = "chflow", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the model selected in the config.
    Run { config: PathBuf },
    /// Run the non-local and local models from the same initial state.
    Compare { config: PathBuf },
    /// Compare minimizing movements with the non-local scheme in 1D.
    Jko1d { config: PathBuf },
    /// Validate a triangle mesh file.
    CheckMesh { mesh: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result: Result<String, AppError> = match &cli.command {
        Command::Run { config } => cmd_run(config),
        Command::Compare { config } => cmd_compare(config),
        Command::Jko1d { config } => cmd_jko1d(config),
        Command::CheckMesh { mesh } => cmd_check_mesh(mesh),
    };
    match result {
        Ok(msg) => {
            print!("{msg}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
