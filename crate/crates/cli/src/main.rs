use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod model_file;

/// Taylor-map polynomial neural networks: train, predict, evaluate, and read
/// trained models back as polynomial ODE systems.
///
/// Set TMPNN_THREADS to limit the number of worker threads.
#[derive(Debug, Parser)]
#[command(name = "tmpnn", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train a model and write it as JSON.
    Train(TrainArgs),
    /// Predict targets for a feature CSV.
    Predict(PredictArgs),
    /// Score a model on a labelled CSV.
    Evaluate(EvaluateArgs),
    /// Print the polynomial ODE system a model integrates.
    InspectOde(InspectArgs),
    /// Re-discretize a model's ODE with more steps.
    RaiseOrder(RaiseArgs),
    /// Write a synthetic dataset as CSV.
    GenData(GenDataArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Generator {
    Friedman1,
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Switch {
    On,
    Off,
}

impl Switch {
    pub fn on(self) -> bool {
        self == Switch::On
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InitKind {
    Identity,
    Perturbed,
}

#[derive(Debug, Clone, Args)]
pub struct GenOptions {
    /// Number of rows (default 10000 for friedman1, 200 for linear).
    #[arg(long)]
    pub samples: Option<usize>,
    /// Extra U(0,1) features appended to friedman1.
    #[arg(long, default_value_t = 0)]
    pub unimportant: usize,
    /// Standard deviation of the Gaussian noise added to friedman1.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    /// Lower end of the x range for linear.
    #[arg(long, default_value_t = -1.0, allow_negative_numbers = true)]
    pub low: f64,
    /// Upper end of the x range for linear.
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub high: f64,
}

#[derive(Debug, Clone, Args)]
#[command(group(clap::ArgGroup::new("source").required(true).args(["data", "gen"])))]
pub struct TrainArgs {
    /// Training table (comma, semicolon, tab or whitespace separated).
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Generate the training data instead of reading it.
    #[arg(long, value_enum)]
    pub gen: Option<Generator>,
    /// Target columns: comma-separated names, or a count of trailing columns.
    #[arg(long, required_unless_present = "gen", conflicts_with = "gen")]
    pub targets: Option<String>,
    #[command(flatten)]
    pub gen_options: GenOptions,
    /// Polynomial order k of the shared map.
    #[arg(long, default_value_t = 3)]
    pub order: usize,
    /// Number of map applications p.
    #[arg(long, default_value_t = 5)]
    pub steps: usize,
    /// Latent state slots.
    #[arg(long, default_value_t = 0)]
    pub latent: usize,
    #[arg(long, default_value_t = 1000)]
    pub epochs: usize,
    /// Mini-batch size, or `full`.
    #[arg(long, default_value = "256")]
    pub batch: String,
    /// Adamax learning rate.
    #[arg(long, default_value_t = 0.002)]
    pub lr: f64,
    #[arg(long, default_value_t = 0.0)]
    pub l1: f64,
    #[arg(long, default_value_t = 0.0)]
    pub l2: f64,
    /// Seed for data generation, splitting, shuffling and initialization.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Fraction of rows held out for testing; 0 trains on everything.
    #[arg(long, default_value_t = 0.25)]
    pub test_fraction: f64,
    /// Hold out rows whose `column` exceeds its `q` quantile, as `column:q`.
    #[arg(long, conflicts_with = "test_fraction")]
    pub split_quantile: Option<String>,
    /// Z-score the features.
    #[arg(long, value_enum, default_value = "on")]
    pub standardize: Switch,
    /// Read predictions through an affine map fitted to the targets.
    #[arg(long, value_enum, default_value = "off")]
    pub standardize_targets: Switch,
    #[arg(long, value_enum, default_value = "identity")]
    pub init: InitKind,
    /// Standard deviation of the noise added by `--init perturbed`.
    #[arg(long, default_value_t = 1e-4)]
    pub init_std: f64,
    /// Also train the initial target and latent slot values.
    #[arg(long)]
    pub init_trainable: bool,
    /// Stop after this many epochs without validation improvement and keep
    /// the best weights. A validation set is carved from the training rows.
    #[arg(long)]
    pub patience: Option<usize>,
    /// Fraction of training rows used for validation with `--patience`.
    #[arg(long, default_value_t = 0.1, requires = "patience")]
    pub valid_fraction: f64,
    /// Rescale gradients to at most this Euclidean norm.
    #[arg(long)]
    pub grad_clip: Option<f64>,
    #[arg(long, default_value = "model.json")]
    pub out: PathBuf,
    /// Write per-epoch losses and final metrics as JSON.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Feature table; columns are matched by name when the header has them.
    #[arg(long)]
    pub data: PathBuf,
    /// Output CSV; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// Target columns; defaults to the model's target names, or the last
    /// columns of a headerless file.
    #[arg(long)]
    pub targets: Option<String>,
    /// Score only rows whose `column` exceeds its `q` quantile.
    #[arg(long, conflicts_with = "test_fraction")]
    pub split_quantile: Option<String>,
    /// Score only a random held-out fraction of the rows.
    #[arg(long)]
    pub test_fraction: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct InspectArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Smallest coefficient magnitude printed.
    #[arg(long, default_value_t = tmpnn::odeview::PRINT_THRESHOLD)]
    pub threshold: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct RaiseArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// New number of steps; must exceed the current one.
    #[arg(long)]
    pub steps: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct GenDataArgs {
    #[arg(value_enum)]
    pub generator: Generator,
    #[command(flatten)]
    pub options: GenOptions,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output CSV; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn configure_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var("TMPNN_THREADS") {
        let n: usize = v
            .parse()
            .map_err(|_| anyhow::anyhow!("TMPNN_THREADS must be a positive integer, got `{v}`"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| match cli.command {
        Command::Train(a) => commands::train(&a),
        Command::Predict(a) => commands::predict(&a),
        Command::Evaluate(a) => commands::evaluate(&a),
        Command::InspectOde(a) => commands::inspect_ode(&a),
        Command::RaiseOrder(a) => commands::raise_order(&a),
        Command::GenData(a) => commands::gen_data(&a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
