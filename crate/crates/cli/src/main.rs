use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::{error, info};
use thermoporo::cli_io::{self, Command, RunConfig};

/// Thermo-poroelastic mixed finite-element solver.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// Configuration file (`key = value` lines with `[section]`s).
    #[arg(short, long, global = true)]
    config: Option<PathBuf>,
    /// Overrides `output_dir` from the configuration.
    #[arg(short, long, global = true)]
    output_dir: Option<PathBuf>,
    /// Seed for randomized checks.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Coefficient constraints and compliance norm equivalence.
    CheckParams,
    /// Nonsingularity of the DAE pencil `sΦ + Ψ`.
    PencilCheck,
    /// Time march with field dumps and energy diagnostics.
    Run,
    /// Manufactured-solution convergence study.
    Mms,
    /// Decoupled limit against the reduced flow-mechanics solver.
    BiotCheck,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::CheckParams => Command::CheckParams,
            Cmd::PencilCheck => Command::PencilCheck,
            Cmd::Run => Command::Run,
            Cmd::Mms => Command::Mms,
            Cmd::BiotCheck => Command::BiotCheck,
        }
    }
}

// check-params needs no mesh, so it runs without a config file
const PARAMS_ONLY: &str = "n = 1\nt_final = 1\n";

fn load(cli: &Cli) -> Result<RunConfig, cli_io::CliError> {
    let mut cfg = match (&cli.config, cli.command) {
        (Some(path), _) => cli_io::read_config(path)?,
        (None, Cmd::CheckParams) => cli_io::parse_config(PARAMS_ONLY)?,
        (None, _) => return Err(cli_io::ConfigError::Missing("--config").into()),
    };
    if let Some(dir) = &cli.output_dir {
        cfg.output_dir = dir.clone();
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let result = load(&cli).and_then(|cfg| cli_io::execute(cli.command.into(), &cfg, cli.seed));
    match &result {
        Ok(outcome) => {
            print!("{}", outcome.report);
            for f in &outcome.files {
                info!("wrote {}", f.display());
            }
            println!("{}", if outcome.passed { "PASS" } else { "FAIL" });
        }
        Err(e) => error!("{e}"),
    }
    ExitCode::from(cli_io::exit_code(&result) as u8)
}
