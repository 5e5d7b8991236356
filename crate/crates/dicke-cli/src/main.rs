//! `dicke` — scenario runner for the collective-spin simulator.
//!
//! Reads a TOML scenario config, validates it (reporting every problem at
//! once), runs the named pipeline, and writes CSV / flat-record outputs.
//! Identical config + seed always produce byte-identical files.
//!
//! Exit codes: 0 success, 2 config error, 3 physics/domain error,
//! 4 I/O error.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use dicke_cli::scenario::CliError;
use dicke_cli::{config, scenario};

#[derive(Parser)]
#[command(name = "dicke", version, about = "Collective-spin interferometry scenario runner")]
struct Cli {
    /// Scenario config file (TOML).
    #[arg(long)]
    config: PathBuf,

    /// Override the config's random seed.
    #[arg(long)]
    seed: Option<u64>,

    /// Output directory (created if missing).
    #[arg(long, default_value = ".")]
    out: PathBuf,

    /// Suppress progress output.
    #[arg(long)]
    quiet: bool,
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let text = fs::read_to_string(&cli.config).map_err(|source| CliError::Io {
        context: format!("reading {}", cli.config.display()),
        source,
    })?;
    let mut cfg = config::validate_config(&text).map_err(CliError::Config)?;
    scenario::apply_seed_override(&mut cfg, cli.seed);
    scenario::run_scenario(&cfg, &cli.out, cli.quiet)?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
