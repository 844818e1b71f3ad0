use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Sequence-based localization with adaptive temporal window length.
///
/// File formats:
///   descriptor file   JSON manifest `{count, dim, dtype:"f32", layout}` next to a
///                     little-endian float32 blob with the same stem and `.bin`
///                     extension. Dense layout is "row-major"; sparse layout is
///                     "csr" (u64 row offsets, u32 feature ids, f32 values).
///   ground truth      CSV `query_index,ref_index`; absent rows have no truth.
///   Wi-Fi records     CSV `frame_index,ap_id,rssi`.
///   shuffle manifest  CSV `new_index,old_index`.
///   matrix cache      descriptor-style manifest (kind "difference-matrix") plus blob.
///
/// A config file (`--config`) holds `key = value` lines whose keys are long flag
/// names of the chosen subcommand; flags given on the command line win.
#[derive(Debug, Parser)]
#[command(name = "seqwin", version, args_override_self = true, verbatim_doc_comment)]
pub struct Cli {
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,

    /// Optional `key = value` config file with defaults for subcommand flags.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// More log output (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Convert PGM images or Wi-Fi records into a descriptor file.
    #[command(args_override_self = true)]
    Ingest(IngestArgs),
    /// Generate a seeded synthetic reference/query/ground-truth triplet.
    #[command(args_override_self = true)]
    Synth(SynthArgs),
    /// Shuffle a query traverse in contiguous segments, or undo a shuffle.
    #[command(args_override_self = true)]
    Shuffle(ShuffleArgs),
    /// Localize a query traverse against a reference traverse.
    #[command(args_override_self = true)]
    Localize(LocalizeArgs),
    /// Emit plot-ready diagnostics: score statistics, p(L) curves, chosen L.
    #[command(args_override_self = true)]
    Diag(DiagArgs),
}

pub const SUBCOMMANDS: [&str; 5] = ["ingest", "synth", "shuffle", "localize", "diag"];

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Directory of binary PGM (P5) images, read in file-name order.
    #[arg(long, value_name = "DIR", conflicts_with = "wifi", required_unless_present = "wifi")]
    pub images: Option<PathBuf>,

    /// Wi-Fi CSV with header `frame_index,ap_id,rssi`.
    #[arg(long, value_name = "CSV")]
    pub wifi: Option<PathBuf>,

    /// Area-average images to WIDTHxHEIGHT before normalization, e.g. 32x16.
    #[arg(long, value_name = "WxH", requires = "images")]
    pub downsample: Option<String>,

    /// Standardize non-overlapping square patches of this side length.
    #[arg(long, value_name = "PIXELS", requires = "images")]
    pub patch_norm: Option<usize>,

    /// Access point count for Wi-Fi (default: one past the largest ap_id).
    #[arg(long, requires = "wifi")]
    pub ap_count: Option<usize>,

    /// Output descriptor manifest (`.json`); the blob goes next to it.
    #[arg(long, short, value_name = "FILE")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModalityArg {
    Image,
    Wifi,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, value_enum, default_value_t = ModalityArg::Image)]
    pub modality: ModalityArg,

    /// Reference and query length in frames.
    #[arg(long, default_value_t = 2000)]
    pub n: usize,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Descriptor dimension (access point count for Wi-Fi).
    #[arg(long)]
    pub dim: Option<usize>,

    /// Query noise standard deviation.
    #[arg(long)]
    pub noise: Option<f64>,

    /// Relative variation of the query's frame spacing.
    #[arg(long)]
    pub drift: Option<f64>,

    /// Frames over which reference appearance decorrelates.
    #[arg(long)]
    pub correlation_len: Option<f64>,

    /// Spread of the log amplitude of appearance (image modality).
    #[arg(long)]
    pub salience_spread: Option<f64>,

    /// Frames over which distinctiveness varies (image modality).
    #[arg(long)]
    pub salience_len: Option<f64>,

    /// Scale of slowly varying scene appearance shared by nearby places (image modality).
    #[arg(long)]
    pub scene_spread: Option<f64>,

    /// Frames over which the scene appearance changes (image modality).
    #[arg(long)]
    pub scene_len: Option<f64>,

    /// Mean access points visible per frame (Wi-Fi modality).
    #[arg(long)]
    pub visible: Option<f64>,

    /// Shuffle the query in contiguous segments and write the manifest.
    #[arg(long)]
    pub shuffle: bool,

    #[arg(long, default_value_t = 0.02)]
    pub min_frac: f64,

    #[arg(long, default_value_t = 0.20)]
    pub max_frac: f64,

    /// Output directory; receives reference.json, query.json,
    /// ground_truth.csv, synth.json and, when shuffled, shuffle_manifest.csv.
    #[arg(long, short, value_name = "DIR")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ShuffleArgs {
    /// Query descriptor file to permute.
    #[arg(long, value_name = "FILE")]
    pub query: PathBuf,

    /// Ground truth to remap alongside the query.
    #[arg(long, value_name = "CSV")]
    pub ground_truth: Option<PathBuf>,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    #[arg(long, default_value_t = 0.02)]
    pub min_frac: f64,

    #[arg(long, default_value_t = 0.20)]
    pub max_frac: f64,

    /// Apply an existing manifest instead of drawing a new shuffle.
    #[arg(long, value_name = "CSV")]
    pub manifest: Option<PathBuf>,

    /// Undo the permutation in `--manifest`.
    #[arg(long, requires = "manifest")]
    pub inverse: bool,

    /// Output directory; receives query.json, shuffle_manifest.csv and,
    /// with --ground-truth, ground_truth.csv.
    #[arg(long, short, value_name = "DIR")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Fixed,
    Adaptive,
    Sweep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ApproxArg {
    Gaussian,
    Robust,
    Gmm2,
    Gmm3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OpArg {
    Sad,
    Cosine,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PrOnArg {
    Score,
    Significance,
}

/// Where the difference matrix comes from.
#[derive(Debug, Args)]
pub struct MatrixSource {
    /// Reference descriptor file.
    #[arg(long, value_name = "FILE", requires = "query", required_unless_present = "matrix")]
    pub reference: Option<PathBuf>,

    /// Query descriptor file.
    #[arg(long, value_name = "FILE", requires = "reference")]
    pub query: Option<PathBuf>,

    /// Load a cached difference matrix instead of descriptors.
    #[arg(long, value_name = "FILE", conflicts_with_all = ["reference", "query"])]
    pub matrix: Option<PathBuf>,

    /// Frame difference operator.
    #[arg(long, value_enum, default_value_t = OpArg::Sad)]
    pub op: OpArg,
}

#[derive(Debug, Args)]
pub struct AdaptiveArgs {
    /// Score distribution approximation for adaptive runs.
    #[arg(long, value_enum, default_value_t = ApproxArg::Gaussian)]
    pub approx: ApproxArg,

    #[arg(long, default_value_t = 10)]
    pub l_min: usize,

    #[arg(long, default_value_t = 500)]
    pub l_max: usize,

    /// Grid step between --l-min and --l-max (both always searched).
    #[arg(long, default_value_t = 5)]
    pub l_stride: usize,

    /// Fit the score distribution without the best score itself.
    #[arg(long)]
    pub exclude_best: bool,
}

#[derive(Debug, Args)]
pub struct LocalizeArgs {
    #[command(flatten)]
    pub source: MatrixSource,

    #[arg(long, value_enum, default_value_t = ModeArg::Adaptive)]
    pub mode: ModeArg,

    /// Window length for --mode fixed.
    #[arg(long, short = 'L')]
    pub window_len: Option<usize>,

    #[command(flatten)]
    pub adaptive: AdaptiveArgs,

    /// Ground truth CSV; enables the report and PR curve.
    #[arg(long, value_name = "CSV")]
    pub ground_truth: Option<PathBuf>,

    /// Fail unless ground truth is given.
    #[arg(long)]
    pub eval: bool,

    /// Correctness radius in frames.
    #[arg(long, default_value_t = 5)]
    pub tolerance: usize,

    /// Value thresholded for adaptive PR curves (fixed runs use the score).
    #[arg(long, value_enum, default_value_t = PrOnArg::Significance)]
    pub pr_on: PrOnArg,

    /// Write per-frame p(L) curves for adaptive runs.
    #[arg(long)]
    pub curves: bool,

    /// Also write the difference matrix here for later --matrix runs.
    #[arg(long, value_name = "FILE")]
    pub save_matrix: Option<PathBuf>,

    /// Output directory.
    #[arg(long, short, value_name = "DIR")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DiagArgs {
    #[command(flatten)]
    pub source: MatrixSource,

    #[command(flatten)]
    pub adaptive: AdaptiveArgs,

    /// Sample every K-th query frame for the statistics and curve files.
    #[arg(long, default_value_t = 50)]
    pub every: usize,

    /// Explicit comma-separated query frames (overrides --every).
    #[arg(long, value_name = "LIST")]
    pub frames: Option<String>,

    /// Comma-separated window lengths for the score statistics file.
    #[arg(long, value_name = "LIST", default_value = "1,10,25,50,100,200,350,500")]
    pub lengths: String,

    /// Output directory; receives score_stats.csv, p_curves.csv, chosen_l.csv.
    #[arg(long, short, value_name = "DIR")]
    pub out: PathBuf,
}
