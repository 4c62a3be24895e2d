//! Batch driver: `areolar verify|action|image --config <path> --out <path>`.
//!
//! Exit codes: 0 when every check passes, 1 when a check fails (the report is
//! still written), 2 for usage or configuration errors (no report), 3 for I/O
//! failures.

pub mod commands;
pub mod config;
pub mod report;

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

pub use config::RunConfig;
pub use report::{Check, Report, Status};

/// Overrides the directory of every output file; file names are kept.
pub const OUT_DIR_ENV: &str = "AREOLAR_OUT_DIR";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("I/O error: {0}")]
    Io(String),
}

impl From<areolar_core::Error> for CliError {
    fn from(e: areolar_core::Error) -> Self {
        CliError::Config(e.to_string())
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// Pointwise identities, Legendre-image checks and multisymplectic structure.
    Verify,
    /// Action integrals over a configured surface.
    Action,
    /// Legendre-image point cloud (CSV) and convexity certificate.
    Image,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Verify => "verify",
            Command::Action => "action",
            Command::Image => "image",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "areolar", version, about = "Numerical checks for homogeneous Lagrangians on p-vectors")]
pub struct Cli {
    #[command(subcommand)]
    pub command: CommandArgs,
}

#[derive(Debug, Subcommand)]
pub enum CommandArgs {
    /// Pointwise identities, Legendre-image checks and multisymplectic structure.
    Verify(IoArgs),
    /// Action integrals over a configured surface.
    Action(IoArgs),
    /// Legendre-image point cloud (CSV) and convexity certificate.
    Image(IoArgs),
}

#[derive(Debug, Clone, clap::Args)]
pub struct IoArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Report path.
    #[arg(long)]
    pub out: PathBuf,
}

impl CommandArgs {
    pub fn split(&self) -> (Command, &IoArgs) {
        match self {
            CommandArgs::Verify(a) => (Command::Verify, a),
            CommandArgs::Action(a) => (Command::Action, a),
            CommandArgs::Image(a) => (Command::Image, a),
        }
    }
}

fn redirect(path: &Path, out_dir: Option<&Path>) -> PathBuf {
    match (out_dir, path.file_name()) {
        (Some(dir), Some(name)) => dir.join(name),
        _ => path.to_path_buf(),
    }
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn image_csv(header: &[String], points: &[areolar_core::LegendreImagePoint]) -> Result<Vec<u8>, CliError> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| CliError::Io(e.to_string());
    writer.write_record(header).map_err(io)?;
    for point in points {
        let row = point.x.iter().chain(point.p.coords()).map(|v| v.to_string());
        writer.write_record(row).map_err(io)?;
    }
    writer.into_inner().map_err(|e| CliError::Io(e.to_string()))
}

/// Runs one command and writes its outputs; returns the report on success.
pub fn execute(command: Command, config_path: &Path, out: &Path, out_dir: Option<&Path>) -> Result<Report, CliError> {
    let config = RunConfig::from_path(config_path)?;
    let report_path = redirect(out, out_dir);
    let report = match command {
        Command::Verify => commands::verify(&config)?,
        Command::Action => commands::action(&config)?,
        Command::Image => {
            let (report, points) = commands::image(&config)?;
            let csv_path = config.output.csv.clone().unwrap_or_else(|| out.with_extension("csv"));
            let header = commands::image_header(config.lagrangian.n, config.lagrangian.p);
            write_file(&redirect(&csv_path, out_dir), &image_csv(&header, &points)?)?;
            report
        }
    };
    write_file(&report_path, report.to_json().as_bytes())?;
    Ok(report)
}

/// Process exit code for `cli`, printing a one-line summary to stderr.
pub fn run(cli: &Cli) -> i32 {
    let (command, args) = cli.command.split();
    let out_dir = std::env::var_os(OUT_DIR_ENV).map(PathBuf::from);
    match execute(command, &args.config, &args.out, out_dir.as_deref()) {
        Ok(report) => {
            for check in report.checks.iter().filter(|c| c.status == Status::Fail) {
                eprintln!(
                    "FAIL {}: residual {} > {:e}{}",
                    check.name,
                    check.residual.map_or("n/a".to_string(), |r| format!("{r:e}")),
                    check.tolerance,
                    check.detail.as_ref().map_or(String::new(), |d| format!(" ({d})"))
                );
            }
            let passed = report.checks.iter().filter(|c| c.status == Status::Pass).count();
            eprintln!("{}: {passed}/{} checks passed", command.name(), report.checks.len());
            if report.passed() {
                0
            } else {
                1
            }
        }
        Err(e) => {
            eprintln!("areolar: {e}");
            e.exit_code()
        }
    }
}
