//! `ot-kantor`: solve, measure and verify discrete optimal transport problems.
//!
//! Exit codes: 0 success, 1 input or configuration error, 2 infeasible
//! problem, 3 verification failure.

mod commands;
mod suites;

use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Parser, Subcommand, ValueEnum};
use ot_kantor::{NumericMode, OtError, Rational, Scalar};
use serde_json::Value;

#[derive(Parser, Debug)]
#[command(name = "ot-kantor", version, about = "Exact discrete optimal transport")]
pub struct Cli {
    /// Numeric mode for every computation.
    #[arg(long, global = true, env = "OT_KANTOR_MODE", default_value = "rational", value_parser = NumericMode::from_str)]
    pub mode: NumericMode,

    /// Comparison tolerance; defaults to 0 (rational) or 1e-9 (float).
    #[arg(long, global = true)]
    pub tol: Option<String>,

    /// Wasserstein order (≥ 1).
    #[arg(long, global = true, default_value_t = 1.0)]
    pub p: f64,

    /// Seed for generated instances.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Solve the Kantorovich problem in a problem file.
    Solve { problem: PathBuf },
    /// Wasserstein distance between two measures on a space.
    Distance {
        #[arg(long)]
        space: PathBuf,
        #[arg(long)]
        mu1: PathBuf,
        #[arg(long)]
        mu2: PathBuf,
    },
    /// Run a property battery on generated or supplied instances.
    Verify {
        suite: Suite,
        /// Number of generated instances.
        #[arg(long)]
        cases: Option<usize>,
        /// Plan file to check (coupling suite); must embed `mu1` and `mu2`.
        #[arg(long)]
        plan: Option<PathBuf>,
        /// First plan to glue (glue suite).
        #[arg(long, requires = "plan23")]
        plan12: Option<PathBuf>,
        /// Second plan to glue (glue suite).
        #[arg(long, requires = "plan12")]
        plan23: Option<PathBuf>,
    },
    /// Compare the simplex solver with the brute-force oracles.
    OracleCheck {
        /// Rows of each instance.
        #[arg(long, default_value_t = 3)]
        n: usize,
        /// Columns of each instance (defaults to `n`).
        #[arg(long)]
        m: Option<usize>,
        #[arg(long, default_value_t = 100)]
        instances: usize,
        /// Uniform marginals, as the permutation oracle requires.
        #[arg(long)]
        uniform: bool,
        /// Oracles to compare against; `auto` picks permutation for uniform instances, basis enumeration otherwise.
        #[arg(long, value_enum, default_value_t = OracleChoice::Auto)]
        oracle: OracleChoice,
    },
    /// Check a space, measure or plan file.
    Validate { kind: FileKind, file: PathBuf },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Coupling,
    Metric,
    Glue,
    Restriction,
    MoreauYosida,
    Liminf,
    Tail,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OracleChoice {
    Auto,
    Basis,
    Permutation,
    Both,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FileKind {
    Space,
    Measure,
    Plan,
}

/// Stable process exit codes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Ok = 0,
    Input = 1,
    Infeasible = 2,
    VerificationFailed = 3,
}

pub struct Report {
    pub status: Status,
    pub body: Value,
}

impl Report {
    pub fn new(status: Status, body: Value) -> Self {
        Self { status, body }
    }

    pub fn verdict(passed: bool, body: Value) -> Self {
        Self::new(if passed { Status::Ok } else { Status::VerificationFailed }, body)
    }
}

/// Resolved, validated configuration for one numeric mode.
pub struct RunConfig<T> {
    pub tol: T,
    pub p: f64,
    pub seed: u64,
}

impl<T: Scalar> RunConfig<T> {
    fn from_cli(cli: &Cli) -> Result<Self, OtError> {
        let tol = match &cli.tol {
            None => T::default_tol(),
            Some(s) => T::parse_literal(s).ok_or_else(|| OtError::Parameter(format!("cannot parse tolerance `{s}`")))?,
        };
        if tol.is_negative_val() {
            return Err(OtError::Parameter("tolerance must be nonnegative".into()));
        }
        if !(cli.p >= 1.0) || !cli.p.is_finite() {
            return Err(OtError::Parameter(format!("order p must be finite and ≥ 1, got {}", cli.p)));
        }
        Ok(Self { tol, p: cli.p, seed: cli.seed })
    }
}

fn run<T: Scalar>(cli: &Cli) -> Result<Report, OtError> {
    let config = RunConfig::<T>::from_cli(cli)?;
    match &cli.command {
        Command::Solve { problem } => commands::solve::<T>(problem),
        Command::Distance { space, mu1, mu2 } => commands::distance::<T>(space, mu1, mu2, &config),
        Command::Verify { suite, cases, plan, plan12, plan23 } => {
            let inputs = suites::Inputs { cases: *cases, plan: plan.as_deref(), glue: plan12.as_deref().zip(plan23.as_deref()) };
            suites::verify::<T>(*suite, &inputs, &config)
        }
        Command::OracleCheck { n, m, instances, uniform, oracle } => {
            commands::oracle_check::<T>(*n, m.unwrap_or(*n), *instances, *uniform, *oracle, &config)
        }
        Command::Validate { kind, file } => commands::validate::<T>(*kind, file, &config),
    }
}

fn main() -> ExitCode {
    // Usage errors exit 1, not clap's default 2, which here means "infeasible".
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { Status::Input as u8 } else { Status::Ok as u8 });
        }
    };
    let result = match cli.mode {
        NumericMode::Rational => run::<Rational>(&cli),
        NumericMode::Float => run::<f64>(&cli),
    };
    let report = match result {
        Ok(report) => report,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(Status::Input as u8);
        }
    };
    let text = ot_kantor::io::to_json_string(&report.body);
    match &cli.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &text) {
                eprintln!("error: cannot write {}: {e}", path.display());
                return ExitCode::from(Status::Input as u8);
            }
        }
        None => print!("{text}"),
    }
    if report.status != Status::Ok {
        if let Some(reason) = report.body.get("error").and_then(Value::as_str) {
            eprintln!("{reason}");
        }
    }
    ExitCode::from(report.status as u8)
}
