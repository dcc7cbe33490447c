use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "grf-toolkit", version, about = "Metadata GRF generation, RGB+GRF fusion, mask ensembling and evaluation")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct GlobalArgs {
    /// Flat TOML config file; flags override its values.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    pub output: Option<PathBuf>,

    /// Worker threads for per-image work.
    #[arg(long, global = true, value_name = "N")]
    pub jobs: Option<usize>,

    /// Regenerate outputs that already exist.
    #[arg(long, global = true)]
    pub force: bool,

    /// Replace a category's base seed, e.g. `dob=123`.
    #[arg(long = "seed-override", global = true, value_name = "CAT=U64")]
    pub seed_overrides: Vec<String>,

    /// Integer component of the power-law exponent (2 and 5 are the usual regimes).
    #[arg(long = "i", global = true, value_name = "N")]
    pub i: Option<u32>,

    /// Mask fusion mode.
    #[arg(long, global = true, value_enum)]
    pub mode: Option<ModeArg>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    #[value(name = "sdf_mean")]
    SdfMean,
    #[value(name = "pixel_mean")]
    PixelMean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FusedFormatArg {
    Png,
    Raw,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportFormatArg {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Histograms and normalisation statistics of the continuous categories.
    Stats(MetadataArgs),
    /// One GRF image and sidecar per (image, category).
    GenGrf(GenArgs),
    /// Merge RGB images with their GRFs into four-channel tensors.
    Fuse(FuseArgs),
    /// Average-merge prediction masks across directories.
    MergeMasks(MergeArgs),
    /// Evaluate predictions against ground truth.
    Eval(EvalArgs),
    /// stats, gen-grf and fuse in sequence.
    Pipeline(PipelineArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct MetadataArgs {
    /// Metadata CSV.
    #[arg(long, value_name = "PATH")]
    pub metadata: Option<PathBuf>,

    /// Two-column `postcode,decile` CSV used for records without an hdd value.
    #[arg(long, value_name = "PATH")]
    pub postcode_table: Option<PathBuf>,

    /// Comma-separated subset of dob,gender,hdd.
    #[arg(long, value_delimiter = ',', value_name = "LIST")]
    pub categories: Option<Vec<String>>,

    /// Histogram bin count.
    #[arg(long, value_name = "N")]
    pub bins: Option<usize>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct GenArgs {
    #[command(flatten)]
    pub metadata: MetadataArgs,

    #[arg(long, value_name = "PX")]
    pub width: Option<usize>,

    #[arg(long, value_name = "PX")]
    pub height: Option<usize>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct FuseArgs {
    /// Directory of RGB wound images (`<image_id>.png|jpg|jpeg`).
    #[arg(long, value_name = "DIR")]
    pub image_dir: Option<PathBuf>,

    /// Directory of GRF images; defaults to `<output>/grf`.
    #[arg(long, value_name = "DIR")]
    pub grf_dir: Option<PathBuf>,

    #[arg(long, value_delimiter = ',', value_name = "LIST")]
    pub categories: Option<Vec<String>>,

    #[arg(long, value_enum)]
    pub format: Option<FusedFormatArg>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct MergeArgs {
    /// Mask directory; repeat for each ensemble member.
    #[arg(long = "input", value_name = "DIR")]
    pub inputs: Vec<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct EvalArgs {
    #[arg(long, value_name = "DIR")]
    pub pred: Option<PathBuf>,

    #[arg(long, value_name = "DIR")]
    pub gt: Option<PathBuf>,

    #[arg(long, value_enum)]
    pub format: Option<ReportFormatArg>,

    /// Report path; defaults to `<output>/eval.<format>`.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct PipelineArgs {
    #[command(flatten)]
    pub gen: GenArgs,

    #[arg(long, value_name = "DIR")]
    pub image_dir: Option<PathBuf>,

    #[arg(long, value_enum)]
    pub format: Option<FusedFormatArg>,
}
