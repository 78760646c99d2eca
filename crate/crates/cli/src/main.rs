//! `lidtest`: batch experiment runner for the low individual degree test toolkit.
//!
//! Exit codes: 0 success, 1 other failure, 2 configuration error, 3 invalid strategy,
//! 4 size guard exceeded. Errors are reported on stderr as one JSON object.

mod batch;
mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lidtest_core::Error;

use config::{Format, Generator, Overrides, RunConfig};

#[derive(Parser)]
#[command(name = "lidtest", version, about = "Simulate and audit the low individual degree test")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration; flags below override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Report path; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Strategy file (JSON).
    #[arg(long, global = true)]
    strategy: Option<PathBuf>,
    /// Built-in strategy generator, used instead of a strategy file.
    #[arg(long, global = true, value_enum)]
    generator: Option<Generator>,
    /// Batch size for randomized commands.
    #[arg(long, global = true)]
    instances: Option<usize>,
}

#[derive(Subcommand, Clone, Copy, Debug)]
enum Command {
    /// Run the test on a strategy: exact failure probabilities or Monte Carlo estimates.
    RunTest,
    /// Naimark dilation or orthogonalization over a batch of random POVMs.
    RoundPovm,
    /// Soundness pipeline and main-theorem witness for a strategy.
    SoundnessReport,
    /// Hypercube-graph eigensystem, spectral gap and Poincaré checks.
    Spectrum,
    /// Self-improvement SDP over a batch of strategies.
    Sdp,
    /// Pasting of random or honest slice measurements.
    Paste,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::RunTest => "run-test",
            Command::RoundPovm => "round-povm",
            Command::SoundnessReport => "soundness-report",
            Command::Spectrum => "spectrum",
            Command::Sdp => "sdp",
            Command::Paste => "paste",
        }
    }
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Io(String),
    Lib(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Lib(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 1,
            CliError::Lib(e) => match e.root() {
                Error::Param(_) => 2,
                Error::Strategy(_) | Error::Measurement(_) | Error::NonSymmetric(_) | Error::Answer(_) | Error::Dimension(_) | Error::Poly(_) => 3,
                Error::Guard { .. } => 4,
                _ => 1,
            },
        }
    }

    fn to_json(&self, command: &str) -> serde_json::Value {
        let (kind, stages, message) = match self {
            CliError::Config(m) => ("config", vec![], m.clone()),
            CliError::Io(m) => ("io", vec![], m.clone()),
            CliError::Lib(e) => {
                let mut stages = vec![];
                let mut cur = e;
                while let Error::Stage { stage, source } = cur {
                    stages.push(*stage);
                    cur = source;
                }
                (error_kind(cur), stages, cur.to_string())
            }
        };
        serde_json::json!({
            "command": command,
            "error": { "kind": kind, "stages": stages, "message": message },
            "exit_code": self.exit_code(),
        })
    }
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::Field(_) => "field",
        Error::ZeroInverse => "zero_inverse",
        Error::Dimension(_) => "dimension",
        Error::Guard { .. } => "guard",
        Error::Poly(_) => "poly",
        Error::Answer(_) => "answer",
        Error::Strategy(_) => "strategy",
        Error::Measurement(_) => "measurement",
        Error::NonSymmetric(_) => "non_symmetric",
        Error::Solver(_) => "solver",
        Error::Param(_) => "param",
        Error::Stage { .. } => "stage",
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let overrides = Overrides {
        seed: cli.seed,
        out: cli.out.clone(),
        workers: cli.workers,
        format: cli.format,
        strategy: cli.strategy.clone(),
        generator: cli.generator,
        instances: cli.instances,
    };
    let cfg = RunConfig::resolve(cli.config.as_deref(), overrides)?;
    let report = match cli.command {
        Command::RunTest => commands::run_test(&cfg)?,
        Command::RoundPovm => commands::round_povm(&cfg)?,
        Command::SoundnessReport => commands::soundness_report(&cfg)?,
        Command::Spectrum => commands::spectrum(&cfg)?,
        Command::Sdp => commands::sdp(&cfg)?,
        Command::Paste => commands::paste(&cfg)?,
    };
    let text = match cfg.format {
        Format::Json => output::json(cli.command.name(), &cfg, &report)?,
        Format::Csv => output::csv(&report.rows)?,
    };
    match &cfg.out {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Io(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json(cli.command.name()));
            ExitCode::from(e.exit_code())
        }
    }
}
