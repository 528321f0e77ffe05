use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dyngem::engine::Method;

#[derive(Debug, Parser)]
#[command(
    name = "dyngem",
    version,
    about = "Dynamic graph embedding experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic SBM series with community migration.
    Generate(GenerateArgs),
    /// Convert a timestamped edge list with external node ids into a series.
    Ingest(IngestArgs),
    /// Train embeddings for every snapshot of a series.
    Train(TrainArgs),
    /// Evaluate a run.
    #[command(subcommand)]
    Eval(EvalCommand),
    /// Write long-format embeddings and the drift series for plotting.
    Export(ExportArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub nodes: usize,
    #[arg(long, default_value_t = 3)]
    pub communities: usize,
    #[arg(long, default_value_t = 0.2)]
    pub p_in: f64,
    #[arg(long, default_value_t = 0.01)]
    pub p_out: f64,
    #[arg(long)]
    pub steps: usize,
    /// Nodes moved to another community per step.
    #[arg(long, default_value_t = 5)]
    pub migrate: usize,
    #[arg(long, default_value_t = 1.0)]
    pub edge_weight: f64,
    /// Active nodes at the first step; grows linearly to --nodes.
    #[arg(long)]
    pub initial_nodes: Option<usize>,
    /// Step at which --merge-absorbed joins --merge-into.
    #[arg(long, requires_all = ["merge_absorbed", "merge_into"])]
    pub merge_step: Option<usize>,
    #[arg(long, requires = "merge_step")]
    pub merge_absorbed: Option<usize>,
    #[arg(long, requires = "merge_step")]
    pub merge_into: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Lines `<step> <src> <dst> [weight]`; ids are arbitrary tokens.
    #[arg(long)]
    pub events: PathBuf,
    /// Existing `external-id,internal-index` mapping to use instead of
    /// first-appearance numbering.
    #[arg(long)]
    pub ids: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CheckpointPolicy {
    All,
    Last,
    None,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long, value_parser = parse_method)]
    pub method: Option<Method>,
    /// Series directory; defaults to the manifest's input.
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Start from the configuration recorded in a previous run's manifest.
    #[arg(long)]
    pub from_manifest: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = CheckpointPolicy::All)]
    pub checkpoints: CheckpointPolicy,
    #[command(flatten)]
    pub hyper: HyperArgs,
}

#[derive(Debug, Default, Args)]
pub struct HyperArgs {
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub hidden: Option<Vec<usize>>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub nu1: Option<f64>,
    #[arg(long)]
    pub nu2: Option<f64>,
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub momentum: Option<f64>,
    #[arg(long)]
    pub decay: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub epochs_first: Option<usize>,
    #[arg(long)]
    pub epochs_warm: Option<usize>,
    #[arg(long)]
    pub noise_scale: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub gf_lambda: Option<f64>,
    #[arg(long)]
    pub gf_iters: Option<usize>,
    #[arg(long)]
    pub gf_lr: Option<f64>,
    /// Snapshots trained concurrently by cold-start methods.
    #[arg(long)]
    pub jobs: Option<usize>,
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: dyngem::Error| e.to_string())
}

#[derive(Debug, Subcommand)]
pub enum EvalCommand {
    /// Average MAP of reconstructing each snapshot.
    Reconstruction(ReconstructionArgs),
    /// Hide edges of the last snapshot, retrain, and rank the hidden edges.
    Linkpred(LinkpredArgs),
    /// Absolute/relative stability per step and the stability constant.
    Stability(SeriesEvalArgs),
    /// Embedding drift per step and flagged steps.
    Anomaly(AnomalyArgs),
    /// Expected (and optionally measured) warm-start speedup.
    Speedup(SpeedupArgs),
}

/// Where embeddings come from: a run directory or an exported long CSV.
#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct EmbeddingSource {
    #[arg(long)]
    pub run: Option<PathBuf>,
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScoreKind {
    /// Decoder reconstructions when checkpoints exist, inner products otherwise.
    Auto,
    Decoder,
    /// `⟨y_i, y_j⟩`.
    Dot,
}

#[derive(Debug, Args)]
pub struct ReconstructionArgs {
    #[command(flatten)]
    pub source: EmbeddingSource,
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ScoreKind::Auto)]
    pub scores: ScoreKind,
    /// Also report the MAP of random scores (seeded) per step.
    #[arg(long)]
    pub null_seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LinkpredArgs {
    /// Run whose manifest supplies the method and configuration.
    #[arg(long)]
    pub run: PathBuf,
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    #[arg(long, default_value_t = 0.15)]
    pub hide_fraction: f64,
    #[arg(long, default_value_t = 0)]
    pub hide_seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SeriesEvalArgs {
    #[command(flatten)]
    pub source: EmbeddingSource,
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnomalyArgs {
    #[command(flatten)]
    pub source: EmbeddingSource,
    /// Flag steps above mean + c·std.
    #[arg(long, default_value_t = 2.0, conflicts_with = "threshold")]
    pub c: f64,
    /// Flag steps above a fixed value instead.
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SpeedupArgs {
    /// Iterations of a from-scratch run per snapshot.
    #[arg(long)]
    pub ns: u64,
    /// Iterations of a warm-started run per snapshot.
    #[arg(long)]
    pub ni: u64,
    #[arg(long = "T")]
    pub steps: u64,
    /// Measured speedup: wall-clock of --baseline-run over --dyngem-run.
    #[arg(long, requires = "baseline_run")]
    pub dyngem_run: Option<PathBuf>,
    #[arg(long, requires = "dyngem_run")]
    pub baseline_run: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[arg(long)]
    pub run: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}
