use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use resyduo_core::{CfMode, Criterion, ProjectionKind, Similarity};

#[derive(Debug, Parser)]
#[command(name = "resyduo", version, about = "KNN recommender for IoT hardware components and libraries")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate a raw corpus and write it in canonical form
    Ingest(IngestArgs),
    /// Generate a planted-block synthetic corpus
    Synth(SynthArgs),
    /// Build a projection matrix from a corpus and apply the cut-off
    Build(BuildArgs),
    /// Train a similarity model on a matrix
    Train(TrainArgs),
    /// Cross-validate every configuration of the hyperparameter grid
    GridSearch(GridArgs),
    /// Cross-validate one configuration
    Evaluate(EvaluateArgs),
    /// Ad-hoc recommendations from a trained model
    Recommend(RecommendArgs),
    /// Serve the HTTP API
    Serve(ServeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Args)]
pub struct DataDir {
    /// Directory holding corpus.json, {T,P,L}.mtx, {T,P,L}.model and projects.json
    #[arg(long)]
    pub data_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CutoffArgs {
    /// Minimum occurrences a column needs to survive
    #[arg(long, default_value_t = 1)]
    pub v_cutoff: usize,
    /// Minimum occurrences a row needs to survive
    #[arg(long, default_value_t = 1)]
    pub h_cutoff: usize,
    /// Repeat the cut-off passes until nothing changes
    #[arg(long)]
    pub fixpoint: bool,
}

#[derive(Debug, Args)]
pub struct KnnArgs {
    #[arg(long, default_value = "msd")]
    pub sim: Similarity,
    #[arg(long, default_value = "user")]
    pub mode: CfMode,
    #[arg(long, default_value_t = 1)]
    pub min_support: usize,
    #[arg(long, default_value_t = 20)]
    pub k: usize,
}

#[derive(Debug, Args)]
pub struct CvArgs {
    #[arg(long, default_value_t = 10)]
    pub folds: usize,
    /// Length of every top-N list
    #[arg(long, default_value_t = 5)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Run single-threaded
    #[arg(long)]
    pub sequential: bool,
}

/// Where the rating matrix comes from: a matrix file, or a corpus projected
/// on the fly.
#[derive(Debug, Args)]
pub struct MatrixSource {
    #[arg(long)]
    pub matrix: Option<PathBuf>,
    #[arg(long, conflicts_with = "matrix")]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub kind: Option<ProjectionKind>,
    /// Keep only positive ratings
    #[arg(long)]
    pub positive_only: bool,
    /// Read `{kind}.mtx` from this directory when no matrix or corpus is given
    #[arg(long)]
    pub data_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    /// Write the result here instead of standard output
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, required_unless_present = "data_dir")]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub data: DataDir,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 200)]
    pub projects: usize,
    #[arg(long, default_value_t = 24)]
    pub tags: usize,
    #[arg(long, default_value_t = 40)]
    pub components: usize,
    #[arg(long, default_value_t = 24)]
    pub libraries: usize,
    #[arg(long, default_value_t = 4)]
    pub blocks: usize,
    #[arg(long, default_value_t = 0.05)]
    pub noise: f64,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long, required_unless_present = "data_dir")]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub data: DataDir,
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub kind: ProjectionKind,
    #[command(flatten)]
    pub cutoff: CutoffArgs,
    #[arg(long)]
    pub positive_only: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub data: DataDir,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub matrix: Option<PathBuf>,
    /// Projection kind; names the files inside --data-dir
    #[arg(long)]
    pub kind: Option<ProjectionKind>,
    #[command(flatten)]
    pub knn: KnnArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub sequential: bool,
    #[command(flatten)]
    pub data: DataDir,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    #[command(flatten)]
    pub source: MatrixSource,
    #[command(flatten)]
    pub cutoff: CutoffArgs,
    #[command(flatten)]
    pub cv: CvArgs,
    #[arg(long, default_value = "rmse")]
    pub criterion: Criterion,
    /// Report nested cross-validation instead of the plain sweep
    #[arg(long)]
    pub nested: bool,
    /// Inner folds for --nested
    #[arg(long, default_value_t = 3, requires = "nested")]
    pub inner_folds: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub source: MatrixSource,
    #[command(flatten)]
    pub cutoff: CutoffArgs,
    #[command(flatten)]
    pub knn: KnnArgs,
    #[command(flatten)]
    pub cv: CvArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct RecommendArgs {
    /// T: components from tags, P: components from a project, L: libraries from components
    #[arg(long)]
    pub kind: ProjectionKind,
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub matrix: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    pub tags: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    pub components: Vec<String>,
    #[arg(long, default_value_t = 5)]
    pub n: usize,
    /// Accept a model whose training hash does not match the matrix
    #[arg(long)]
    pub force: bool,
    #[command(flatten)]
    pub output: OutputArgs,
    #[command(flatten)]
    pub data: DataDir,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: std::net::IpAddr,
    #[arg(long, default_value = ".")]
    pub data_dir: PathBuf,
    #[arg(long)]
    pub force: bool,
}
