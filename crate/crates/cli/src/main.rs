//! `maxcorr`: rank-based independence testing from the command line.
//!
//! Subcommands: `test` (one pair of columns), `screen` (matrix of rows
//! against a shared x-vector with FDR control), `power` / `bias` /
//! `nulljoint` (Monte Carlo studies), `extremal` (constructed rank
//! sequences), `oracle` (exact small-n verification report).
//!
//! Exit codes: 0 success, 1 computational failure (I/O on results, a failed
//! oracle identity), 2 input error (bad flags, unparsable CSV, invalid
//! sample). Primary output goes to stdout or `--out`; warnings and the
//! screening summary go to stderr.

mod commands;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use maxcorr::inference::Method;
use maxcorr::ranks::TiePolicy;
use maxcorr::sim::Scenario;

/// Environment variable consulted for the worker count when `--threads` is
/// absent.
const THREADS_ENV: &str = "MAXCORR_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "maxcorr",
    version,
    about = "Independence tests combining Spearman and Chatterjee rank correlations"
)]
struct Cli {
    /// Worker threads (default: MAXCORR_THREADS, then all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Write primary output to a file instead of stdout
    #[arg(long, global = true, value_name = "FILE")]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Test one x,y sample (two-column CSV with header) for independence
    Test(TestArgs),
    /// Test every row of a matrix against a shared x-vector, with BH-FDR
    Screen(ScreenArgs),
    /// Estimate test power under a synthetic dependence scenario
    Power(PowerArgs),
    /// Measure asymptotic-vs-permutation p-value bias on null data
    Bias(BiasArgs),
    /// Sample the null joint distribution of the scaled statistics
    Nulljoint(NulljointArgs),
    /// Emit an extremal rank construction and its statistic values
    Extremal(ExtremalArgs),
    /// Verify exact small-n identities and report PASS/FAIL
    Oracle(OracleArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Spearman,
    Chatterjee,
    Combined,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Spearman => Method::Spearman,
            MethodArg::Chatterjee => Method::Chatterjee,
            MethodArg::Combined => Method::Combined,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PValuesArg {
    Asymptotic,
    Permutation,
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TiePolicyArg {
    Reject,
    RandomBreak,
}

impl TiePolicyArg {
    fn with_seed(self, seed: u64) -> TiePolicy {
        match self {
            TiePolicyArg::Reject => TiePolicy::Reject,
            TiePolicyArg::RandomBreak => TiePolicy::RandomBreak { seed },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ScenarioArg {
    Null,
    Linear,
    Quadratic,
    Sinusoid,
    Stepwise,
}

impl From<ScenarioArg> for Scenario {
    fn from(s: ScenarioArg) -> Self {
        match s {
            ScenarioArg::Null => Scenario::Null,
            ScenarioArg::Linear => Scenario::Linear,
            ScenarioArg::Quadratic => Scenario::Quadratic,
            ScenarioArg::Sinusoid => Scenario::Sinusoid,
            ScenarioArg::Stepwise => Scenario::Stepwise,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OracleCheck {
    /// List the exact null distribution rows (verified against the known
    /// table at n = 3)
    Table1,
    /// Cov[S, xi] = 0 exactly
    Lemma1,
    /// Closed-form rank moment identities
    RankMoments,
    /// Floating statistics vs exact rationals over all permutations
    Agreement,
    /// Brute-force max |S| subject to xi below a threshold
    Divergence,
    /// Everything above (the table listing is skipped for n > 4)
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

#[derive(Debug, Args)]
struct TestArgs {
    /// CSV file; header row required, first two columns are x and y
    #[arg(long, value_name = "FILE")]
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = MethodArg::Combined)]
    method: MethodArg,
    /// P-value computation: exact requires n <= 8
    #[arg(long, value_enum, default_value_t = PValuesArg::Asymptotic)]
    pvalues: PValuesArg,
    /// Permutation count R for --pvalues permutation
    #[arg(long, default_value_t = 9999)]
    permutations: usize,
    /// Seed for permutation draws and random tie breaking
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Reject tied values or break them randomly (seeded)
    #[arg(long, value_enum, default_value_t = TiePolicyArg::Reject)]
    tie_policy: TiePolicyArg,
}

#[derive(Debug, Args)]
struct ScreenArgs {
    /// Matrix CSV: first column row ids, remaining columns one value per
    /// condition; the header carries the numeric x-vector
    #[arg(long, value_name = "FILE")]
    input: PathBuf,
    /// Single-column CSV (with header) overriding the x-vector
    #[arg(long, value_name = "FILE")]
    x_file: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = MethodArg::Combined)]
    method: MethodArg,
    /// FDR level for the BH adjustment
    #[arg(long, default_value_t = 0.05)]
    q: f64,
    #[arg(long, value_enum, default_value_t = PValuesArg::Asymptotic)]
    pvalues: PValuesArg,
    #[arg(long, default_value_t = 9999)]
    permutations: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = TiePolicyArg::Reject)]
    tie_policy: TiePolicyArg,
}

#[derive(Debug, Args)]
struct PowerArgs {
    #[arg(long, value_enum)]
    scenario: ScenarioArg,
    #[arg(long)]
    n: usize,
    #[arg(long, value_enum, default_value_t = MethodArg::Combined)]
    test: MethodArg,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value_t = 5000)]
    runs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Threshold permutation p-values instead of asymptotic ones
    #[arg(long, value_enum, default_value_t = PValuesArg::Asymptotic)]
    pvalues: PValuesArg,
    #[arg(long, default_value_t = 999)]
    permutations: usize,
}

#[derive(Debug, Args)]
struct BiasArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 1000)]
    runs: usize,
    #[arg(long, default_value_t = 5000)]
    permutations: u64,
    #[arg(long, value_enum, default_value_t = MethodArg::Combined)]
    test: MethodArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct NulljointArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 10000)]
    replicates: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct ExtremalArgs {
    /// 1 = zigzag (xi high, |S| -> 0), 2 = interleaved (|S| high, xi small)
    #[arg(long)]
    case: u8,
    /// Size for case 1 (odd, >= 3)
    #[arg(long)]
    n: Option<usize>,
    /// Half-block length for case 2 (>= 2)
    #[arg(long)]
    m: Option<usize>,
    /// Sorted tail length for case 2
    #[arg(long)]
    p: Option<usize>,
    #[arg(long, value_enum, default_value_t = FormatArg::Json)]
    format: FormatArg,
}

#[derive(Debug, Args)]
struct OracleArgs {
    /// Sample size to verify (2..=8)
    #[arg(long)]
    n: usize,
    #[arg(long, value_enum, default_value_t = OracleCheck::All)]
    check: OracleCheck,
    /// Threshold for the divergence search, as a rational like 1/100 or -1/10
    #[arg(long, default_value = "0", allow_hyphen_values = true)]
    epsilon: String,
}

/// Early errors are input problems (exit 2); failures while producing
/// results are computational (exit 1).
#[derive(Debug)]
enum CliError {
    Input(String),
    Compute(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Compute(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(msg) | CliError::Compute(msg) => f.write_str(msg),
        }
    }
}

impl From<maxcorr::Error> for CliError {
    fn from(e: maxcorr::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Compute(format!("I/O failure: {e}"))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Compute(format!("serialization failure: {e}"))
    }
}

fn init_threads(requested: Option<usize>) -> Result<(), CliError> {
    let count = match requested {
        Some(t) => Some(t),
        None => match std::env::var(THREADS_ENV) {
            Ok(raw) => Some(raw.trim().parse::<usize>().map_err(|_| {
                CliError::Input(format!(
                    "{THREADS_ENV} must be a positive integer, got '{raw}'"
                ))
            })?),
            Err(_) => None,
        },
    };
    if let Some(t) = count {
        if t == 0 {
            return Err(CliError::Input("thread count must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::Compute(format!("cannot configure thread pool: {e}")))?;
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let mut out = io::open_output(cli.out.as_deref())?;
    match &cli.command {
        Command::Test(args) => commands::cmd_test(args, out.as_mut()),
        Command::Screen(args) => commands::cmd_screen(args, out.as_mut()),
        Command::Power(args) => commands::cmd_power(args, out.as_mut()),
        Command::Bias(args) => commands::cmd_bias(args, out.as_mut()),
        Command::Nulljoint(args) => commands::cmd_nulljoint(args, out.as_mut()),
        Command::Extremal(args) => commands::cmd_extremal(args, out.as_mut()),
        Command::Oracle(args) => commands::cmd_oracle(args, out.as_mut()),
    }?;
    out.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = init_threads(cli.threads) {
        eprintln!("error: {e}");
        return ExitCode::from(e.exit_code());
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
