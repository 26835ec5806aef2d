use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ilqr_track::harness::{cmd_compare, cmd_path_generate, cmd_run, CommandOutcome, ExperimentConfig, HarnessError};

/// iLQR and time-varying LQR path tracking for a differential-drive robot.
#[derive(Debug, Parser)]
#[command(name = "ilqr-track", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Reference-path utilities.
    Path {
        #[command(subcommand)]
        command: PathCommand,
    },
    /// Run the configured controller(s) and write trajectories plus report.json.
    Run(Common),
    /// Compare baseline and candidate controllers; writes compare.json.
    Compare {
        #[command(flatten)]
        common: Common,
        /// Comma-separated n_points values to repeat the comparison at, e.g. 50,100,200,400.
        #[arg(long, value_delimiter = ',')]
        sweep: Vec<usize>,
    },
}

#[derive(Debug, Subcommand)]
enum PathCommand {
    /// Write path.csv for the configured path.
    Generate(Common),
}

#[derive(Debug, Args)]
struct Common {
    /// TOML config; omitted sections take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long)]
    out: PathBuf,
    /// Overrides perturbation.seed.
    #[arg(long)]
    seed: Option<u64>,
}

fn load(config: Option<&Path>) -> Result<ExperimentConfig, HarnessError> {
    match config {
        Some(file) => ExperimentConfig::load(file),
        None => Ok(ExperimentConfig::default()),
    }
}

fn execute(cli: Cli) -> Result<CommandOutcome, HarnessError> {
    match cli.command {
        Command::Path { command: PathCommand::Generate(c) } => cmd_path_generate(&load(c.config.as_deref())?, &c.out),
        Command::Run(c) => cmd_run(&load(c.config.as_deref())?, &c.out, c.seed),
        Command::Compare { common: c, sweep } => cmd_compare(&load(c.config.as_deref())?, &c.out, c.seed, &sweep),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match execute(cli) {
        Ok(outcome) => {
            for note in &outcome.notes {
                eprintln!("{note}");
            }
            for file in &outcome.files {
                println!("{}", file.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
