use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

mod commands;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] tropdiv::Error),
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Parse { path: PathBuf, source: serde_json::Error },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CliError {
    fn kind(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.kind(),
            CliError::Usage(_) => "usage",
            CliError::Io { .. } => "io",
            CliError::Parse { .. } | CliError::Json(_) => "json",
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[derive(Parser, Debug, Serialize)]
#[command(name = "tropdiv", version, about = "Tropical polynomial division and ReLU network compression")]
struct Cli {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads for restarts, pairs and classes.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    /// Output file; stdout when absent. The run manifest goes next to it.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Command {
    /// Exact division over the rationals.
    DivideExact(ProblemArgs),
    /// Alternating partition and linear-programming division.
    DivideApprox(ApproxArgs),
    /// Division of a sum of ReLU units.
    DivideComposite(CompositeArgs),
    /// Compress a one-hidden-layer network.
    Compress(CompressArgs),
    /// Structured L1 pruning baseline.
    PruneL1(PruneArgs),
    /// Error rate of a network or compressed model.
    Evaluate(EvaluateArgs),
    /// Parameter count of a model file or a layout.
    CountParams(CountArgs),
}

#[derive(Args, Debug, Serialize)]
pub struct ProblemArgs {
    /// Dividend polynomial JSON.
    #[arg(long)]
    pub dividend: PathBuf,
    /// Divisor polynomial JSON.
    #[arg(long)]
    pub divisor: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct ApproxArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[command(flatten)]
    pub fit: FitArgs,
    /// Standard normal samples drawn when no sample file is given.
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
    /// Sample points CSV, one per row.
    #[arg(long)]
    pub sample_file: Option<PathBuf>,
    /// Write `iteration,error` rows of the best restart here.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Write the run log JSON here.
    #[arg(long)]
    pub log: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct FitArgs {
    /// Number of quotient terms.
    #[arg(long, default_value_t = 3)]
    pub terms: usize,
    #[arg(long, default_value_t = 20)]
    pub iters: usize,
    #[arg(long, default_value_t = 1)]
    pub restarts: usize,
    /// Tolerance of the remainder and effectiveness tests.
    #[arg(long, env = "TROPDIV_TOL", default_value_t = 1e-6)]
    pub tol: f64,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum QuotientForm {
    Maxout,
    Relu,
}

#[derive(Args, Debug, Serialize)]
pub struct CompositeArgs {
    /// Composite polynomial JSON.
    #[arg(long)]
    pub dividend: PathBuf,
    /// Divisor polynomial JSON; the zero polynomial when absent.
    #[arg(long)]
    pub divisor: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = QuotientForm::Maxout)]
    pub quotient: QuotientForm,
    #[command(flatten)]
    pub fit: FitArgs,
    #[command(flatten)]
    pub fw: FwArgs,
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
    #[arg(long)]
    pub sample_file: Option<PathBuf>,
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct FwArgs {
    /// Frank-Wolfe step size.
    #[arg(long, default_value_t = 0.2)]
    pub rho: f64,
    #[arg(long, default_value_t = 50)]
    pub fw_iterations: usize,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    MaxoutBinary,
    ReluBinary,
    MulticlassSimplified,
    MulticlassMultibinary,
}

#[derive(Args, Debug, Serialize)]
pub struct CompressArgs {
    #[arg(long, value_enum)]
    pub kind: ModelKind,
    /// Network JSON.
    #[arg(long)]
    pub net: PathBuf,
    /// Inputs of the compressed layer, CSV.
    #[arg(long)]
    pub data: PathBuf,
    /// Number of leading rows of the data used for division.
    #[arg(long, default_value_t = 200)]
    pub division_samples: usize,
    /// The two classes of a binary model taken from a multiclass network, or the classes whose
    /// pairs enter a multibinary model.
    #[arg(long, value_delimiter = ',')]
    pub classes: Option<Vec<i64>>,
    /// Terms per maxout unit or ReLU units per polynomial.
    #[arg(long, default_value_t = 5)]
    pub terms: usize,
    #[arg(long, default_value_t = 20)]
    pub iters: usize,
    #[arg(long, default_value_t = 1)]
    pub restarts: usize,
    #[command(flatten)]
    pub fw: FwArgs,
    /// Quotients kept by a multibinary model; all when absent.
    #[arg(long)]
    pub subset: Option<usize>,
    /// Replace the kept multibinary quotients by random directions.
    #[arg(long)]
    pub random_control: bool,
    /// Head network JSON to attach.
    #[arg(long)]
    pub head: Option<PathBuf>,
    /// Write the feature values of every row of `--export-data` (default: `--data`) here.
    #[arg(long)]
    pub features_out: Option<PathBuf>,
    #[arg(long)]
    pub export_data: Option<PathBuf>,
    /// Write per-polynomial diagnostics JSON here.
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long, env = "TROPDIV_TOL", default_value_t = 1e-6)]
    pub tol: f64,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ScopeArg {
    Full,
    Incoming,
}

#[derive(Args, Debug, Serialize)]
pub struct PruneArgs {
    #[arg(long)]
    pub net: PathBuf,
    /// Hidden units to keep.
    #[arg(long, required_unless_present = "budget", conflicts_with = "budget")]
    pub keep: Option<usize>,
    /// Keep as many units as fit in this many parameters.
    #[arg(long)]
    pub budget: Option<u64>,
    #[arg(long, value_enum, default_value_t = ScopeArg::Full)]
    pub scope: ScopeArg,
    /// Reduce a multiclass network to these two classes first.
    #[arg(long, value_delimiter = ',')]
    pub classes: Option<Vec<i64>>,
}

#[derive(Args, Debug, Serialize)]
pub struct EvaluateArgs {
    /// Network or compressed model JSON.
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub labels: PathBuf,
    /// Keep only rows with these labels; two classes also reduce a multiclass network.
    #[arg(long, value_delimiter = ',')]
    pub classes: Option<Vec<i64>>,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShapeArg {
    Dense,
    TropicalPair,
    MaxoutBinary,
    ReluBinary,
    MulticlassSimplified,
    MulticlassMultibinary,
}

#[derive(Args, Debug, Serialize)]
pub struct CountArgs {
    /// Network or compressed model JSON.
    #[arg(long, required_unless_present = "shape", conflicts_with = "shape")]
    pub model: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub shape: Option<ShapeArg>,
    /// Layer widths of a dense layout, input first.
    #[arg(long, value_delimiter = ',')]
    pub sizes: Option<Vec<usize>>,
    #[arg(long)]
    pub input_dim: Option<usize>,
    #[arg(long)]
    pub terms: Option<usize>,
    #[arg(long)]
    pub units: Option<usize>,
    #[arg(long)]
    pub classes: Option<usize>,
    #[arg(long)]
    pub polynomials: Option<usize>,
    /// Hidden width of the head network.
    #[arg(long)]
    pub head_hidden: Option<usize>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    argv: Vec<String>,
    config: &'a Cli,
    seed: u64,
    jobs: usize,
    elapsed_ms: f64,
    outputs: Vec<String>,
    version: &'static str,
}

pub fn read_text(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn command_name(cmd: &Command) -> &'static str {
    match cmd {
        Command::DivideExact(_) => "divide-exact",
        Command::DivideApprox(_) => "divide-approx",
        Command::DivideComposite(_) => "divide-composite",
        Command::Compress(_) => "compress",
        Command::PruneL1(_) => "prune-l1",
        Command::Evaluate(_) => "evaluate",
        Command::CountParams(_) => "count-params",
    }
}

fn run(cli: &Cli) -> CliResult<()> {
    if cli.jobs == 0 {
        return Err(CliError::Usage("--jobs must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {} workers: {e}", cli.jobs)))?;
    let start = Instant::now();
    let outcome = pool.install(|| match &cli.command {
        Command::DivideExact(a) => commands::divide_exact(a),
        Command::DivideApprox(a) => commands::divide_approx(a, cli.seed),
        Command::DivideComposite(a) => commands::divide_composite(a, cli.seed),
        Command::Compress(a) => commands::compress(a, cli.seed),
        Command::PruneL1(a) => commands::prune(a),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::CountParams(a) => commands::count_params(a),
    })?;

    let mut outputs = outcome.side_outputs;
    match &cli.out {
        Some(path) => {
            write_text(path, &outcome.main)?;
            outputs.insert(0, path.display().to_string());
        }
        None => println!("{}", outcome.main),
    }
    let manifest = Manifest {
        command: command_name(&cli.command),
        argv: std::env::args().collect(),
        config: cli,
        seed: cli.seed,
        jobs: cli.jobs,
        elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
        outputs,
        version: env!("CARGO_PKG_VERSION"),
    };
    let text = serde_json::to_string_pretty(&manifest)?;
    match &cli.out {
        Some(path) => {
            let mut name = path.as_os_str().to_owned();
            name.push(".manifest.json");
            write_text(Path::new(&name), &text)?;
        }
        None => eprintln!("{text}"),
    }
    Ok(())
}

fn report(kind: &str, message: &str) {
    let body = serde_json::json!({ "error": { "kind": kind, "message": message } });
    eprintln!("{body}");
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => e.exit(),
        Err(e) => {
            report("usage", e.to_string().trim());
            return ExitCode::from(2);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            report(e.kind(), &e.to_string());
            ExitCode::FAILURE
        }
    }
}
