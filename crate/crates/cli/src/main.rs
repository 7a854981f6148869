//! `hisd`: run saddle searches, convergence studies and property checks.
//!
//! Exit codes: 0 success, 1 usage error or failed check, 2 I/O failure.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hisd_core::io::{parse_tau, parse_tau_list, parse_vector};
use hisd_core::{HisdError, Mode, ModelKind};

#[derive(Debug, Parser)]
#[command(
    name = "hisd",
    version,
    about = "High-index saddle dynamics experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate one trajectory and write every grid point.
    Run(RunArgs),
    /// Measure sup-norm errors and observed orders against a fine reference.
    Converge(ConvergeArgs),
    /// Run property suites and report pass/fail per property.
    Check(CheckArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Suite {
    Lemmas,
    Derivatives,
    GhisdEquiv,
    All,
}

fn tau_arg(s: &str) -> Result<f64, String> {
    parse_tau(s).map_err(|e| e.to_string())
}

/// A comma-separated list parsed as one argument value.
#[derive(Debug, Clone, PartialEq)]
struct List(Vec<f64>);

fn taus_arg(s: &str) -> Result<List, String> {
    parse_tau_list(s).map(List).map_err(|e| e.to_string())
}

fn vector_arg(s: &str) -> Result<List, String> {
    parse_vector(s).map(List).map_err(|e| e.to_string())
}

fn model_arg(s: &str) -> Result<ModelKind, String> {
    s.parse::<ModelKind>().map_err(|e: HisdError| e.to_string())
}

fn mode_arg(s: &str) -> Result<Mode, String> {
    s.parse::<Mode>().map_err(|e: HisdError| e.to_string())
}

/// Surface, scheme and initial condition shared by `run` and `converge`.
#[derive(Debug, Args)]
struct SetupArgs {
    /// minyaev-quapp, eckhardt or toy-rotational
    #[arg(long, value_parser = model_arg)]
    model: Option<ModelKind>,
    /// hisd or ghisd
    #[arg(long, value_parser = mode_arg)]
    mode: Option<Mode>,
    /// Saddle index; must equal the number of --v vectors.
    #[arg(long)]
    k: Option<usize>,
    /// Initial position, comma separated.
    #[arg(long, value_parser = vector_arg, allow_hyphen_values = true)]
    x0: Option<List>,
    /// Initial direction, comma separated; repeat once per direction.
    /// Vectors are normalized on load and must be mutually orthogonal.
    #[arg(long = "v", value_parser = vector_arg, allow_hyphen_values = true)]
    v: Vec<List>,
    #[arg(long = "T", alias = "t-final", value_parser = tau_arg)]
    t_final: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    /// GHiSD only: leave the step size off the lower-index projection sum.
    #[arg(long)]
    ghisd_unscaled_projection: bool,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[command(flatten)]
    setup: SetupArgs,
    /// Step size, e.g. 1/256, 2^-8 or 0.0039
    #[arg(long, value_parser = tau_arg)]
    tau: f64,
    /// Output file; stdout when omitted.
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Append the energy column (gradient models only).
    #[arg(long)]
    energy: bool,
    /// Keep pre-orthonormalization vectors and normalization constants (JSON only).
    #[arg(long)]
    record_intermediates: bool,
}

#[derive(Debug, Args)]
struct ConvergeArgs {
    /// table1..table4 or example3; explicit options override its fields.
    #[arg(long)]
    preset: Option<String>,
    #[command(flatten)]
    setup: SetupArgs,
    /// Coarse step sizes, comma separated.
    #[arg(long, value_parser = taus_arg)]
    taus: Option<List>,
    /// Reference step size.
    #[arg(long, value_parser = tau_arg)]
    ref_tau: Option<f64>,
    /// Compare with a published table (table1..table4); exit 1 on mismatch.
    #[arg(long)]
    expect: Option<String>,
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Debug, Args)]
struct CheckArgs {
    #[arg(long, value_enum, default_value = "all")]
    suite: Suite,
    /// Configuration for the lemma and equivalence suites; all tables when omitted.
    #[arg(long)]
    preset: Option<String>,
    /// Step sizes for the lemma suite; the preset's list when omitted.
    #[arg(long, value_parser = taus_arg)]
    taus: Option<List>,
    /// Write a JSON report of all checks.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Run(a) => commands::run(a),
        Command::Converge(a) => commands::converge(a),
        Command::Check(a) => commands::check(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
