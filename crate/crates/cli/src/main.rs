use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use landscape_core::dataset::NormScope;
use landscape_core::models::ModelKind;

mod analyze;
mod bundle;
mod collect;
mod report;

/// Collect and analyse time-varying hyperparameter landscapes.
#[derive(Parser)]
#[command(name = "landscape", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the phase-wise collection protocol against the plan's surrogate.
    Collect(CollectArgs),
    /// Fit surfaces and run the analyses on a collected dataset.
    Analyze(AnalyzeArgs),
    /// Verify a bundle's content hashes and print its tables.
    Report(ReportArgs),
    /// Check a plan file or a collected dataset without running anything.
    Validate(ValidateArgs),
}

#[derive(Args)]
pub struct CollectArgs {
    #[arg(long)]
    pub plan: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Reuse snapshots already present in `<out>/snapshots`.
    #[arg(long)]
    pub resume: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelChoice {
    Ilm,
    Igpr,
    Both,
}

impl ModelChoice {
    pub fn kinds(self) -> Vec<ModelKind> {
        match self {
            ModelChoice::Ilm => vec![ModelKind::Ilm],
            ModelChoice::Igpr => vec![ModelKind::Igpr],
            ModelChoice::Both => ModelKind::ALL.to_vec(),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
pub enum ScopeChoice {
    Pooled,
    PerPhase,
}

impl From<ScopeChoice> for NormScope {
    fn from(s: ScopeChoice) -> Self {
        match s {
            ScopeChoice::Pooled => NormScope::PooledAllPhases,
            ScopeChoice::PerPhase => NormScope::PerPhase,
        }
    }
}

#[derive(Args)]
pub struct AnalyzeArgs {
    /// Directory written by `collect`.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value = "both")]
    pub model: ModelChoice,
    #[arg(long, value_enum, default_value = "pooled")]
    pub normalization: ScopeChoice,
    #[arg(long, default_value_t = 51)]
    pub grid_resolution: usize,
    #[arg(long, default_value_t = 50)]
    pub ice_resolution: usize,
    #[arg(long, default_value_t = 5)]
    pub cv_folds: usize,
    /// Significance level of the folding test.
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Monte Carlo draws for the folding-test p-value.
    #[arg(long, default_value_t = 1000)]
    pub null_draws: usize,
    /// Seed for cross-validation shuffles, GP restarts and the folding test.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 8)]
    pub gp_restarts: usize,
    /// Also write SVG figures.
    #[arg(long)]
    pub svg: bool,
}

#[derive(Args)]
pub struct ReportArgs {
    /// Directory written by `analyze`.
    #[arg(long)]
    pub bundle: PathBuf,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
pub struct ValidateArgs {
    #[arg(long)]
    pub plan: Option<PathBuf>,
    #[arg(long)]
    pub data: Option<PathBuf>,
}

/// Exit status 2 for bad input, 3 for failures while running.
#[derive(Debug)]
pub enum Failure {
    Validation(String),
    Runtime(String),
}

impl Failure {
    pub fn validation(e: impl std::fmt::Display) -> Self {
        Failure::Validation(e.to_string())
    }

    pub fn runtime(e: impl std::fmt::Display) -> Self {
        Failure::Runtime(e.to_string())
    }
}

pub type CliResult<T = ()> = Result<T, Failure>;

fn init_threads() -> CliResult {
    let Ok(raw) = std::env::var("LANDSCAPE_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::Validation(format!("LANDSCAPE_THREADS must be a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(Failure::runtime)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = init_threads().and_then(|()| match cli.command {
        Command::Collect(a) => collect::run(&a),
        Command::Analyze(a) => analyze::run(&a),
        Command::Report(a) => report::run(&a),
        Command::Validate(a) => collect::validate(&a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(3)
        }
    }
}
