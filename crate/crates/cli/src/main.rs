//! `diagosc`: experiment runner for coupled phase oscillators with
//! diagonalizable interactions. Emits data files only; all randomness
//! flows from one top-level seed.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

/// Failure modes mapped to documented exit codes.
#[derive(Debug)]
pub enum CliError {
    /// exit 1: the configuration or arguments are invalid
    Config(String),
    /// exit 2: a numerical routine failed (quadrature, integration, I/O)
    Numerical(String),
    /// exit 3: the verification suite ran and a claim failed
    Verification(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::Numerical(_) => 2,
            CliError::Verification(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "invalid config: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CliError::Verification(m) => write!(f, "verification failed: {m}"),
        }
    }
}

impl From<diagosc_core::CoreError> for CliError {
    fn from(e: diagosc_core::CoreError) -> Self {
        use diagosc_core::CoreError as E;
        match e {
            E::InvalidParameter(_) | E::InvalidDimension(_) => CliError::Config(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Numerical(format!("i/o: {e}"))
    }
}

#[derive(Parser)]
#[command(name = "diagosc", version, about)]
struct Cli {
    /// TOML experiment configuration; flags override file values
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// top-level seed; every stochastic result is a pure function of it
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// output file path
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// worker threads (default: all cores); results do not depend on it
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// system size
    #[arg(long, global = true)]
    n: Option<usize>,
    /// coupling strength
    #[arg(long, global = true, allow_negative_numbers = true)]
    epsilon: Option<f64>,
    /// natural-frequency standard deviation
    #[arg(long, global = true, allow_negative_numbers = true)]
    sigma: Option<f64>,
    /// Monte Carlo trial count
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// integration horizon
    #[arg(long = "t-end", global = true, allow_negative_numbers = true)]
    t_end: Option<f64>,
    /// re-read emitted files and validate their schema
    #[arg(long, global = true)]
    schema_check: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Emit the input-to-output frequency curve (a, mu) as CSV
    ModeCurve,
    /// Emit the output-frequency density for Gaussian inputs as CSV
    Density,
    /// Sweep Monte Carlo coherence probability over (N, epsilon) as CSV
    QcScan,
    /// Simulate one instance end to end; JSON report plus trajectory CSV
    Simulate,
    /// Run the statistical verification suite; JSON report
    Verify,
    /// Build and validate a basis matrix; CSV export plus JSON report
    ValidateBasis,
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let file = match &cli.config {
        Some(p) => config::load(p)?,
        None => config::FileConfig::default(),
    };
    if let Some(t) = cli.threads.or(file.threads) {
        if t == 0 {
            return Err(CliError::Config("threads must be at least 1".into()));
        }
        // ignore the error when a pool already exists (tests call run twice)
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    let seed = cli.seed.or(file.seed).unwrap_or(0);
    let out = cli.out.clone().or_else(|| file.out.clone());
    let ctx = commands::Ctx {
        seed,
        out,
        schema_check: cli.schema_check,
        n: cli.n,
        epsilon: cli.epsilon,
        sigma: cli.sigma,
        trials: cli.trials,
        t_end: cli.t_end,
    };
    match cli.command {
        Command::ModeCurve => commands::mode_curve(&ctx, file.mode_curve.unwrap_or_default()),
        Command::Density => commands::density(&ctx, file.density.unwrap_or_default()),
        Command::QcScan => commands::qc_scan(&ctx, file.qc_scan.unwrap_or_default()),
        Command::Simulate => commands::simulate(&ctx, file.simulate.unwrap_or_default()),
        Command::Verify => commands::verify(&ctx, file.verify.unwrap_or_default()),
        Command::ValidateBasis => {
            commands::validate_basis(&ctx, file.validate_basis.unwrap_or_default())
        }
    }
}

fn main() -> ExitCode {
    // bad arguments are invalid configuration (exit 1), not clap's
    // default usage code; --help and --version stay successful
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("diagosc: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
