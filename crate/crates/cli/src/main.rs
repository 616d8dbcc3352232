//! `qemcheck`: run identity checks on model quasi-Einstein structures.
//!
//! Exit codes: 0 when every selected check passes, 1 when a check misses its
//! tolerance, 2 for configuration and usage errors. Nothing is written on
//! exit code 2.

mod commands;
mod config;
mod report;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::commands::CliError;
use crate::config::RunConfig;
use crate::report::Report;

#[derive(Parser)]
#[command(name = "qemcheck", version, about = "Verify generalized m-quasi-Einstein structures")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Pointwise and sample checks on one structure.
    Verify(RunArgs),
    /// Integral checks on a compact structure.
    Integrate(RunArgs),
    /// Pointwise and sample checks over every (n, m, tau) combination.
    Scan(RunArgs),
    /// Print the identity catalog as JSON.
    Catalog(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Flat `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    json: Option<PathBuf>,
    /// Also write one CSV row per structure and identity.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Multiplies every tolerance.
    #[arg(long = "tol-scale")]
    tol_scale: Option<f64>,
}

enum Output {
    Report(Report),
    Catalog(String),
}

fn load(args: &RunArgs) -> Result<RunConfig, CliError> {
    let path = args
        .config
        .as_ref()
        .ok_or_else(|| CliError::Usage("--config <path> is required".into()))?;
    let mut config = RunConfig::from_file(path)?;
    config.apply_overrides(args.seed, args.tol_scale)?;
    Ok(config)
}

fn execute(command: &Command) -> Result<Output, CliError> {
    Ok(match command {
        Command::Verify(args) => Output::Report(commands::verify(&load(args)?)?),
        Command::Integrate(args) => Output::Report(commands::integrate(&load(args)?)?),
        Command::Scan(args) => Output::Report(commands::scan(&load(args)?)?),
        Command::Catalog(_) => Output::Catalog(commands::catalog_json()),
    })
}

fn emit(command: &Command, output: Output) -> Result<bool, CliError> {
    let (Command::Verify(args) | Command::Integrate(args) | Command::Scan(args) | Command::Catalog(args)) = command;
    let mut stdout = std::io::stdout().lock();
    let io_error = |e: std::io::Error| CliError::Usage(format!("cannot write output: {e}"));
    let report = match output {
        Output::Catalog(json) => {
            match &args.json {
                Some(path) => report::write_all(&[(path, &json)]).map_err(io_error)?,
                None => stdout.write_all(json.as_bytes()).map_err(io_error)?,
            }
            return Ok(true);
        }
        Output::Report(report) => report,
    };
    let json = report.to_json();
    let csv = report.to_csv();
    let mut files = Vec::new();
    if let Some(path) = &args.json {
        files.push((path.as_path(), json.as_str()));
    }
    if let Some(path) = &args.csv {
        files.push((path.as_path(), csv.as_str()));
    }
    report::write_all(&files).map_err(io_error)?;
    let is_scan = matches!(command, Command::Scan(_));
    if is_scan && args.csv.is_none() {
        stdout.write_all(csv.as_bytes()).map_err(io_error)?;
    } else if !is_scan && args.json.is_none() {
        stdout.write_all(json.as_bytes()).map_err(io_error)?;
    }
    eprint!("{}", report.summary());
    Ok(report.pass)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match execute(&cli.command).and_then(|output| emit(&cli.command, output)) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
