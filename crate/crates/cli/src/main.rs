use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use dm4nls_cli::commands::{cmd_average, cmd_check, cmd_simulate, Suite};
use dm4nls_cli::config::RunConfig;
use dm4nls_cli::CliError;

#[derive(Parser)]
#[command(
    name = "dm4nls",
    version,
    about = "Fourth-order NLS with time-dependent dispersion: simulate, check invariants, run averaging studies"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a configured run; write diagnostics, checkpoint, summary.
    Simulate { config: PathBuf },
    /// Run an invariant suite; emit a pass/fail JSONL report.
    Check {
        config: PathBuf,
        #[arg(long, value_enum, default_value_t = Suite::All)]
        suite: Suite,
    },
    /// Compare ε-scaled runs against the averaged problem.
    Average { config: PathBuf },
}

/// DM4NLS_THREADS caps the process-wide worker pool.
fn apply_thread_cap() -> Result<(), CliError> {
    if let Ok(v) = std::env::var("DM4NLS_THREADS") {
        let n: usize = v
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| CliError::validation(format!("DM4NLS_THREADS: invalid thread count '{v}'")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::validation(format!("DM4NLS_THREADS: {e}")))?;
    }
    Ok(())
}

fn run() -> Result<(), CliError> {
    apply_thread_cap()?;
    match Cli::parse().command {
        Command::Simulate { config } => cmd_simulate(&RunConfig::load(&config)?),
        Command::Check { config, suite } => cmd_check(&RunConfig::load(&config)?, suite),
        Command::Average { config } => cmd_average(&RunConfig::load(&config)?),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code as u8)
        }
    }
}
