//! `rvdecay`: classify, simulate and verify convergence rates of
//! `x' = -f(x) + g(t)` from a JSON experiment file.
//!
//! Precedence of settings, highest first: command-line flags, the
//! `RVDECAY_MAX_STEPS` environment variable (step budget only), the config
//! file, built-in defaults.
//!
//! Exit codes: 0 success, 1 usage or config error, 2 out-of-scope input,
//! 3 inconclusive (including failed verification).

mod commands;
mod config;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rvdecay_core::harness::RunOptions;

use config::{max_steps_from_env, Format, Overrides, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Usage(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("writing output: {0}")]
    Output(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Exit {
    Success,
    OutOfScope,
    Inconclusive,
}

impl Exit {
    fn code(self) -> u8 {
        match self {
            Exit::Success => 0,
            Exit::OutOfScope => 2,
            Exit::Inconclusive => 3,
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "rvdecay",
    version,
    about = "Convergence-rate regimes of x' = -f(x) + g(t)"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Classify the regime and predict the rate constant.
    Classify(ConfigArgs),
    /// Integrate the equation and write the trajectory.
    Simulate {
        #[command(flatten)]
        config: ConfigArgs,
        /// Solve y' = -f(y) through the flow map, ignoring g.
        #[arg(long)]
        unperturbed: bool,
        /// Add the columns F_of_x, f_of_x and g_of_t.
        #[arg(long)]
        diagnostics: bool,
    },
    /// Classify, integrate and compare predicted with measured rates.
    Verify(ConfigArgs),
    /// Run built-in closed-form examples.
    Corpus(CorpusArgs),
    /// Estimate the index of f at zero and of g at infinity.
    Indices(ConfigArgs),
}

#[derive(Args, Debug)]
struct ConfigArgs {
    /// Experiment file (JSON).
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long)]
    rtol: Option<f64>,
    #[arg(long)]
    atol: Option<f64>,
    /// Write the report here instead of stdout.
    #[arg(long, value_name = "PATH")]
    output: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Args, Debug)]
struct CorpusArgs {
    /// Entry to run; repeat for several.
    #[arg(long = "entry", value_name = "NAME", conflicts_with = "all")]
    entries: Vec<String>,
    /// Run every entry.
    #[arg(long)]
    all: bool,
    #[arg(long)]
    rtol: Option<f64>,
    #[arg(long)]
    atol: Option<f64>,
    #[arg(long, value_name = "PATH")]
    output: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

fn experiment(args: &ConfigArgs) -> Result<config::Experiment, CliError> {
    let mut cfg = RunConfig::load(&args.config)?;
    cfg.apply(&Overrides {
        horizon: args.horizon,
        rtol: args.rtol,
        atol: args.atol,
        output: args.output.clone(),
        format: args.format,
    });
    cfg.build(max_steps_from_env()?)
}

fn run(cli: Cli) -> Result<Exit, CliError> {
    match cli.command {
        Command::Classify(a) => commands::classify(&experiment(&a)?),
        Command::Simulate {
            config,
            unperturbed,
            diagnostics,
        } => commands::simulate(&experiment(&config)?, unperturbed, diagnostics),
        Command::Verify(a) => commands::verify(&experiment(&a)?),
        Command::Indices(a) => commands::indices(&experiment(&a)?),
        Command::Corpus(a) => {
            for (name, v) in [("--rtol", a.rtol), ("--atol", a.atol)] {
                if let Some(v) = v {
                    if !(v > 0.0 && v.is_finite()) {
                        return Err(CliError::Usage(format!(
                            "{} must be positive, got {:?}",
                            name, v
                        )));
                    }
                }
            }
            let opts = RunOptions {
                max_steps: max_steps_from_env()?,
                rtol: a.rtol,
                atol: a.atol,
            };
            let sel = commands::CorpusSelection {
                names: a.entries,
                all: a.all,
            };
            commands::corpus_run(
                &sel,
                opts,
                a.format.unwrap_or_default(),
                a.output.as_deref(),
            )
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(exit) => ExitCode::from(exit.code()),
        Err(e) => {
            eprintln!("error: {}", e);
            ExitCode::from(1)
        }
    }
}
