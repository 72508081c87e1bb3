use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "dotedge", version, about = "Random-dot edge stimuli and a contrario detection")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a dataset of stimuli and its manifest.
    Synth(SynthArgs),
    /// Merge consecutive frames of a directory of bitmaps.
    Merge(MergeArgs),
    /// Run the a contrario detector over a dataset.
    Detect(DetectArgs),
    /// Predicted NFA grids and decision curves.
    Predict(PredictArgs),
    /// Score detections or human responses against a dataset.
    Evaluate(EvaluateArgs),
    /// Rank detector integration times by L2 distance to a subject curve.
    Fit(FitArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    StaticImage,
    DynamicMergedImage,
    StaticVideo,
    DynamicVideo,
}

impl From<KindArg> for dotedge::dataset::DatasetKind {
    fn from(k: KindArg) -> Self {
        use dotedge::dataset::DatasetKind as K;
        match k {
            KindArg::StaticImage => K::StaticImage,
            KindArg::DynamicMergedImage => K::DynamicMergedImage,
            KindArg::StaticVideo => K::StaticVideo,
            KindArg::DynamicVideo => K::DynamicVideo,
        }
    }
}

#[derive(Debug, Args)]
pub struct Common {
    /// Output directory (default: a subdirectory of $DOTEDGE_OUT).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads; outputs do not depend on it.
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, value_enum)]
    pub kind: KindArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Stimuli per configuration (default: the published dataset size).
    #[arg(long)]
    pub per_config: Option<usize>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum AlignArg {
    Past,
    Centered,
    Future,
}

#[derive(Debug, Args)]
pub struct MergeArgs {
    /// Directory of `.pbm` frames, merged in file name order.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub nf: usize,
    #[arg(long, default_value_t = 1)]
    pub stride: usize,
    #[arg(long, value_enum, default_value_t = AlignArg::Centered)]
    pub align: AlignArg,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum WindowsArg {
    /// Only the first merge of each video.
    First,
    /// Every `--stride` frames.
    All,
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    /// Dataset directory holding `manifest.json`.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    pub eps: f64,
    /// Candidate widths, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "8")]
    pub widths: Vec<u32>,
    /// Frames merged per window (videos only).
    #[arg(long, default_value_t = 1)]
    pub nf: usize,
    /// Support pairs drawn per image.
    #[arg(long, default_value_t = dotedge::detector::DetectorConfig::DEFAULT_ITERATIONS, conflicts_with = "exhaustive")]
    pub iters: usize,
    /// Score every white pair within reach instead of sampling.
    #[arg(long)]
    pub exhaustive: bool,
    /// Frames between window starts (videos, `--windows all`; default nf).
    #[arg(long)]
    pub stride: Option<usize>,
    #[arg(long, value_enum, default_value_t = WindowsArg::First)]
    pub windows: WindowsArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Edge length the candidates are built with.
    #[arg(long, default_value_t = dotedge::dataset::EDGE_LENGTH)]
    pub length: f64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum CaseArg {
    Static,
    Dynamic,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long, value_enum)]
    pub case: CaseArg,
    /// Candidate width.
    #[arg(long)]
    pub w: u32,
    #[arg(long, default_value_t = 1.0)]
    pub eps: f64,
    /// Background densities (static case), comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0.005,0.01,0.02,0.03,0.04,0.05")]
    pub pb: Vec<f64>,
    /// Single-frame background density (dynamic case).
    #[arg(long, default_value_t = dotedge::dataset::VIDEO_P_B)]
    pub pb1: f64,
    /// Largest number of merged frames (dynamic case).
    #[arg(long, default_value_t = 10)]
    pub tmax: u32,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Dataset directory holding `manifest.json`.
    #[arg(long)]
    pub data: PathBuf,
    /// `detections.jsonl` written by `detect`, or its directory.
    #[arg(long, conflicts_with = "responses", required_unless_present = "responses")]
    pub detections: Option<PathBuf>,
    /// Response log written by the experiment service.
    #[arg(long)]
    pub responses: Option<PathBuf>,
    /// Only responses of this subject.
    #[arg(long, requires = "responses")]
    pub subject: Option<String>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// `tpr.csv` of the subject.
    #[arg(long)]
    pub subject: PathBuf,
    /// Family members as `NF=PATH` to a `tpr.csv`, repeated.
    #[arg(long = "family", value_parser = parse_member, required = true)]
    pub family: Vec<(usize, PathBuf)>,
    #[command(flatten)]
    pub common: Common,
}

fn parse_member(s: &str) -> Result<(usize, PathBuf), String> {
    let (n, path) = s.split_once('=').ok_or_else(|| format!("expected NF=PATH, got {s:?}"))?;
    let n = n.parse().map_err(|_| format!("bad frame count {n:?}"))?;
    Ok((n, PathBuf::from(path)))
}
