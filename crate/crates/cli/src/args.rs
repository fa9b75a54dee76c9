//! Command-line argument definitions.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use symmpoint_core::{DEFAULT_EMD_EPSILON, DEFAULT_FSCORE_THRESHOLD, DEFAULT_SAMPLE_COUNT};

#[derive(Parser)]
#[command(
    name = "symmpoint",
    version,
    about = "Point-cloud symmetry and reconstruction-evaluation toolkit",
    long_about = "Reflective-symmetry transforms, symmetry-plane fitting, and the \
                  CD / EMD / F-Score evaluation stack with table-scaling report \
                  conventions.\n\nThe SYMM_THREADS environment variable caps the \
                  worker-thread count (0 or unset = automatic).\n\nExit codes: \
                  0 success, 2 argument/parse/io failure, 3 violated precondition, \
                  4 fit did not converge."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Compute CD, EMD, and F-Score between two point clouds
    Metrics(MetricsArgs),
    /// Estimate a cloud's reflective symmetry plane
    FitPlane(FitPlaneArgs),
    /// Complete a cloud by mirroring it across a symmetry plane
    Symmetrize(SymmetrizeArgs),
    /// Evaluate a manifest of cloud pairs and write a CSV report
    EvalBatch(EvalBatchArgs),
    /// Sample a point cloud from a mesh surface
    Sample(SampleArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum CdModeArg {
    Squared,
    Euclidean,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum EmdArg {
    /// Exact up to the solver cap, auction approximation beyond
    Auto,
    Exact,
    Approx,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum NormalizeArg {
    /// Normalize both clouds with the ground truth's unit-cube record
    #[value(name = "unit_cube")]
    UnitCube,
    /// Evaluate in the caller's coordinates
    None,
}

impl NormalizeArg {
    pub fn name(self) -> &'static str {
        match self {
            NormalizeArg::UnitCube => "unit_cube",
            NormalizeArg::None => "none",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum StrategyArg {
    Union,
    #[value(name = "replace_worse_half")]
    ReplaceWorseHalf,
}

impl StrategyArg {
    pub fn name(self) -> &'static str {
        match self {
            StrategyArg::Union => "union",
            StrategyArg::ReplaceWorseHalf => "replace_worse_half",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    Text,
    Json,
    Csv,
}

#[derive(Args)]
pub struct MetricsArgs {
    /// Predicted / reconstructed cloud (.xyz, .ply, or .obj)
    pub pred: PathBuf,
    /// Ground-truth cloud
    pub gt: PathBuf,

    /// F-Score distance threshold (normalized coordinates)
    #[arg(long, default_value_t = DEFAULT_FSCORE_THRESHOLD)]
    pub threshold: f64,

    /// Chamfer distance term
    #[arg(long, value_enum, default_value_t = CdModeArg::Squared)]
    pub cd_mode: CdModeArg,

    /// EMD solver selection
    #[arg(long, value_enum, default_value_t = EmdArg::Auto)]
    pub emd: EmdArg,

    /// Additive accuracy of the approximate EMD solver
    #[arg(long, default_value_t = DEFAULT_EMD_EPSILON)]
    pub epsilon: f64,

    /// Coordinate normalization applied before evaluation
    #[arg(long, value_enum, default_value_t = NormalizeArg::UnitCube)]
    pub normalize: NormalizeArg,

    /// Emit the report as JSON
    #[arg(long, conflicts_with = "csv")]
    pub json: bool,

    /// Emit the report as a single-row CSV
    #[arg(long, conflicts_with = "json")]
    pub csv: bool,

    /// Write the report here instead of stdout
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Write a reproducibility manifest (JSON) here
    #[arg(long)]
    pub manifest_out: Option<PathBuf>,
}

impl MetricsArgs {
    pub fn format(&self) -> OutputFormat {
        if self.json {
            OutputFormat::Json
        } else if self.csv {
            OutputFormat::Csv
        } else {
            OutputFormat::Text
        }
    }
}

#[derive(Args)]
pub struct FitPlaneArgs {
    /// Input cloud (needs at least 4 non-degenerate points)
    pub cloud: PathBuf,

    /// Descent restarts (first three are PCA seed planes)
    #[arg(long, default_value_t = 8)]
    pub restarts: usize,

    /// Iteration cap per restart
    #[arg(long, default_value_t = 300)]
    pub max_iters: usize,

    /// Optimize the plane offset too (default: plane through centroid)
    #[arg(long)]
    pub fit_offset: bool,

    /// Residual distance term
    #[arg(long, value_enum, default_value_t = CdModeArg::Squared)]
    pub mode: CdModeArg,

    /// Write the optimizer trace (iteration,residual CSV) here
    #[arg(long)]
    pub trace_out: Option<PathBuf>,

    /// Emit the result as JSON
    #[arg(long)]
    pub json: bool,

    /// Write the report here instead of stdout
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Write a reproducibility manifest (JSON) here
    #[arg(long)]
    pub manifest_out: Option<PathBuf>,
}

#[derive(Args)]
pub struct SymmetrizeArgs {
    /// Input cloud
    pub cloud: PathBuf,
    /// Output cloud path (format from extension)
    pub out_cloud: PathBuf,

    /// Mirror plane as "nx ny nz d"
    #[arg(long, group = "plane_source")]
    pub plane: Option<String>,

    /// Fit the plane automatically before symmetrizing
    #[arg(long, group = "plane_source")]
    pub auto: bool,

    /// Completion strategy
    #[arg(long, value_enum, default_value_t = StrategyArg::Union)]
    pub strategy: StrategyArg,

    /// Restarts for --auto fitting
    #[arg(long, default_value_t = 8)]
    pub restarts: usize,

    /// Write a reproducibility manifest (JSON) here
    #[arg(long)]
    pub manifest_out: Option<PathBuf>,
}

#[derive(Args)]
pub struct EvalBatchArgs {
    /// Directory containing predicted clouds
    pub pred_dir: PathBuf,
    /// Directory containing ground-truth clouds
    pub gt_dir: PathBuf,

    /// Pairs manifest CSV with header id,category,pred,gt
    #[arg(long)]
    pub pairs: PathBuf,

    /// Output report CSV
    #[arg(long)]
    pub out: PathBuf,

    /// Add per-category mean rows
    #[arg(long)]
    pub per_category: bool,

    #[arg(long, default_value_t = DEFAULT_FSCORE_THRESHOLD)]
    pub threshold: f64,

    #[arg(long, value_enum, default_value_t = CdModeArg::Squared)]
    pub cd_mode: CdModeArg,

    #[arg(long, value_enum, default_value_t = EmdArg::Auto)]
    pub emd: EmdArg,

    #[arg(long, default_value_t = DEFAULT_EMD_EPSILON)]
    pub epsilon: f64,

    #[arg(long, value_enum, default_value_t = NormalizeArg::UnitCube)]
    pub normalize: NormalizeArg,

    /// Write a reproducibility manifest (JSON) here
    #[arg(long)]
    pub manifest_out: Option<PathBuf>,
}

#[derive(Args)]
pub struct SampleArgs {
    /// Input mesh (OBJ)
    pub mesh: PathBuf,
    /// Output cloud path (format from extension)
    pub out_cloud: PathBuf,

    /// Number of points to sample
    #[arg(long, default_value_t = DEFAULT_SAMPLE_COUNT)]
    pub n: usize,

    /// Sampling seed
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Manifest path (default: `<out>.manifest.json`)
    #[arg(long)]
    pub manifest_out: Option<PathBuf>,
}
