//! `ohlcast` command-line front end.
//!
//! Exit codes: 0 success, 2 usage or data error, 3 I/O error.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{Overrides, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl From<ohlcast::Error> for CliError {
    fn from(e: ohlcast::Error) -> Self {
        match e {
            ohlcast::Error::Io(e) => CliError::Io(e.to_string()),
            ohlcast::Error::Csv(e) if e.is_io_error() => CliError::Io(e.to_string()),
            e => CliError::Usage(e.to_string()),
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        if e.is_io() {
            CliError::Io(e.to_string())
        } else {
            CliError::Usage(e.to_string())
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        if e.is_io_error() {
            CliError::Io(e.to_string())
        } else {
            CliError::Usage(e.to_string())
        }
    }
}

#[derive(Parser)]
#[command(name = "ohlcast", version, about = "Forecast OHLC bars with VAR/VEC models in an unconstrained space")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a preset scenario series as CSV plus a JSON sidecar of its parameters.
    Simulate(RunArgs),
    /// Rolling-window backtests over a (q, m) grid.
    Backtest(RunArgs),
    /// Forecast the next m bars from the last q bars of a series.
    Forecast(RunArgs),
    /// Summarize backtest result files into tables and a long-format CSV.
    Report {
        #[command(flatten)]
        run: RunArgs,
        /// Directory holding `{tag}_q{q}_m{m}.json` files (default: the output directory).
        #[arg(long)]
        dir: Option<PathBuf>,
        /// Also print the comparison against the naive forecast for every setting.
        #[arg(long)]
        naive: bool,
    },
    /// Check every bar of an OHLC CSV against the constraints.
    #[command(hide = true)]
    Validate { file: PathBuf },
}

#[derive(Args, Debug, Default)]
struct RunArgs {
    /// JSON file with any of the settings below; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Preset scenario: 1, 2, 3 or persistent.
    #[arg(long)]
    scenario: Option<String>,
    /// OHLC CSV with header date,open,high,low,close.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Window length: 40, 40,50,70 or 30-70[:step].
    #[arg(long)]
    q: Option<String>,
    /// Forecast horizon, same syntax as --q.
    #[arg(long)]
    m: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Largest VAR lag tried by AIC.
    #[arg(long)]
    p_max: Option<usize>,
    /// ADF significance: 0.01, 0.05 or 0.10.
    #[arg(long)]
    alpha_adf: Option<f64>,
    /// Johansen significance: 0.01, 0.05 or 0.10.
    #[arg(long)]
    alpha_johansen: Option<f64>,
    #[arg(long)]
    workers: Option<usize>,
    /// Output file (simulate, forecast) or directory (backtest, report).
    /// Defaults to $OHLCAST_OUT, then the current directory.
    #[arg(long, short = 'o')]
    out: Option<PathBuf>,
}

impl From<RunArgs> for Overrides {
    fn from(a: RunArgs) -> Self {
        Overrides {
            config: a.config,
            scenario: a.scenario,
            input: a.input,
            q: a.q,
            m: a.m,
            seed: a.seed,
            p_max: a.p_max,
            alpha_adf: a.alpha_adf,
            alpha_johansen: a.alpha_johansen,
            workers: a.workers,
            out: a.out,
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate(a) => commands::simulate(&RunConfig::resolve(a.into())?),
        Command::Backtest(a) => commands::backtest(&RunConfig::resolve(a.into())?),
        Command::Forecast(a) => commands::forecast(&RunConfig::resolve(a.into())?),
        Command::Report { run, dir, naive } => commands::report(&RunConfig::resolve(run.into())?, dir.as_deref(), naive),
        Command::Validate { file } => commands::validate(&file),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
