//! `gkw`: summarize, verify and benchmark streaming quantile summaries.
//!
//! Exit codes: 0 success, 1 input error, 2 configuration error,
//! 3 verification failure.

mod bench;
mod input;
mod summarize;
mod verify;

use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gkw_core::{Algorithm, ScheduleMode};

#[derive(Debug)]
pub enum CliError {
    Input(String),
    Config(String),
    Verify(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Input(_) => 1,
            CliError::Config(_) => 2,
            CliError::Verify(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Input(m) | CliError::Config(m) | CliError::Verify(m) => m,
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Input(format!("output failed: {e}"))
    }
}

#[derive(Parser, Debug)]
#[command(name = "gkw", version, about = "Streaming quantile summaries with weighted updates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Stream the input through one summary and answer quantile queries.
    Summarize(SummarizeArgs),
    /// Run the invariant and accuracy battery, exiting 3 on any violation.
    Verify(VerifyArgs),
    /// Measure summary sizes and timings over a matrix of configurations.
    Bench(BenchArgs),
}

/// Where items come from.
#[derive(Args, Debug, Clone)]
pub struct InputArgs {
    /// Generated stream, `order:weights:seed:n` (e.g. `random:uniform(1000):7:20000`).
    #[arg(long, value_name = "SPEC", conflicts_with = "file")]
    gen: Option<String>,
    /// Replaces the seed of `--gen`.
    #[arg(long)]
    seed: Option<u64>,
    /// Input file with one `value` or `value,weight` per line; `-` or absent reads stdin.
    file: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SummarizeArgs {
    #[arg(long, default_value = "0.01")]
    epsilon: f64,
    #[arg(long, default_value = "wgk", value_parser = parse_algorithm)]
    algo: Algorithm,
    #[arg(long, default_value = "delayed", value_parser = parse_schedule)]
    schedule: ScheduleMode,
    /// Spread each deletion step over the arrivals before the next one.
    #[arg(long)]
    smooth: bool,
    /// Comma-separated quantiles, as decimals or fractions (`0.5,1/3`).
    #[arg(long, value_delimiter = ',', value_name = "PHI")]
    query: Vec<String>,
    /// Emit a stats row every N elements; without N, at every new time step.
    #[arg(long, value_name = "N", num_args = 0..=1, default_missing_value = "0")]
    stats: Option<u64>,
    /// Check each answer against an exact oracle.
    #[arg(long)]
    verify: bool,
    #[command(flatten)]
    input: InputArgs,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[arg(long, default_value = "0.01")]
    epsilon: f64,
    /// Restrict to one algorithm; all four by default.
    #[arg(long, value_parser = parse_algorithm)]
    algo: Option<Algorithm>,
    /// Restrict to one schedule; both by default.
    #[arg(long, value_parser = parse_schedule)]
    schedule: Option<ScheduleMode>,
    #[arg(long)]
    smooth: bool,
    /// Stream length of the default matrix, used when no input is given.
    #[arg(long, default_value_t = 10_000)]
    size: u64,
    #[command(flatten)]
    input: InputArgs,
    /// Corrupts one stored entry halfway through each run.
    #[arg(long, hide = true)]
    inject_fault: bool,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_value = "greedy,gk,wgk,wgreedy", value_parser = parse_algorithm)]
    algo: Vec<Algorithm>,
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.01")]
    epsilon: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "10000,100000")]
    n: Vec<u64>,
    #[arg(long, value_delimiter = ',', default_value = "random,sorted,reverse,dup")]
    order: Vec<String>,
    #[arg(long, default_value = "delayed", value_parser = parse_schedule)]
    schedule: ScheduleMode,
    #[arg(long)]
    smooth: bool,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Run cells on all cores. Timings get noisier.
    #[arg(long)]
    parallel: bool,
}

fn parse_algorithm(s: &str) -> Result<Algorithm, String> {
    s.parse()
}

fn parse_schedule(s: &str) -> Result<ScheduleMode, String> {
    s.parse()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let stdout = io::stdout();
    let mut out = io::BufWriter::new(stdout.lock());
    let result = match cli.command {
        Command::Summarize(a) => summarize::run(&a, &mut out),
        Command::Verify(a) => verify::run(&a, &mut out),
        Command::Bench(a) => bench::run(&a, &mut out),
    };
    let flushed = out.flush();
    match result.and(flushed.map_err(CliError::from)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("gkw: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
