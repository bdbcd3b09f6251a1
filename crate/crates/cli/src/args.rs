use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use narrative_core::analysis::{DEFAULT_HISTOGRAM_BINS, DEFAULT_HISTOGRAM_EXTENT};
use narrative_core::features::{DEFAULT_DELTA, DEFAULT_SEGMENT_DURATION, DEFAULT_SINUSOID_DIM};
use narrative_core::sync::DEFAULT_QC_THRESHOLD;

/// Build, check and analyze localized narratives.
#[derive(Debug, Parser)]
#[command(name = "narr", version)]
pub struct Cli {
    /// Abort on the first malformed input line instead of skipping it.
    #[arg(long, global = true)]
    pub strict: bool,

    /// Worker threads for corpus subcommands (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,

    /// Write results here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Align an automatic transcript to a manual caption.
    Align(PairArgs),
    /// Build one narrative line from a transcript pair and a trace.
    Build(BuildArgs),
    /// Quality-gate a transcript pair, or re-gate a corpus.
    Qc(QcArgs),
    /// Emit trace feature sequences for every narrative of a corpus.
    Features(FeaturesArgs),
    /// Score predicted captions against references.
    Eval(EvalArgs),
    /// Caption richness statistics.
    Stats(StatsArgs),
    /// Mouse-trace localization histogram around class boxes.
    Hist(HistArgs),
    /// Render narratives to semantic label maps.
    Labelmap(LabelmapArgs),
}

#[derive(Debug, Args)]
pub struct PairArgs {
    /// Automatic transcript: JSON array of {utterance, start_time, end_time}.
    #[arg(long)]
    pub auto: PathBuf,
    /// Manual caption as plain text.
    #[arg(long)]
    pub manual: PathBuf,
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    #[command(flatten)]
    pub pair: PairArgs,
    /// Mouse trace: JSON array of strokes of {x, y, t}.
    #[arg(long)]
    pub trace: PathBuf,
    #[arg(long, default_value_t = DEFAULT_QC_THRESHOLD)]
    pub threshold: f64,
    #[arg(long, default_value = "")]
    pub dataset_id: String,
    #[arg(long, default_value = "")]
    pub image_id: String,
    #[arg(long, default_value = "")]
    pub annotator_id: String,
}

#[derive(Debug, Args)]
pub struct QcArgs {
    #[arg(long, requires = "manual", conflicts_with = "corpus")]
    pub auto: Option<PathBuf>,
    #[arg(long, requires = "auto")]
    pub manual: Option<PathBuf>,
    /// Corpus whose stored verdicts are re-gated at --threshold.
    #[arg(long, required_unless_present = "auto")]
    pub corpus: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_QC_THRESHOLD)]
    pub threshold: f64,
    /// With --corpus, write only passing narratives.
    #[arg(long, requires = "corpus")]
    pub pass_only: bool,
}

#[derive(Debug, Args)]
pub struct FeaturesArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, default_value_t = DEFAULT_DELTA)]
    pub delta: f64,
    #[arg(long, default_value_t = DEFAULT_SEGMENT_DURATION)]
    pub segment_duration: f64,
    /// Width of the time encoding per window; 0 leaves it out.
    #[arg(long, default_value_t = DEFAULT_SINUSOID_DIM)]
    pub sinusoid_dim: usize,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Corpus of predicted captions.
    #[arg(long)]
    pub pred: PathBuf,
    /// Corpus of reference captions; the first record per image_id is used.
    #[arg(long = "ref")]
    pub reference: PathBuf,
    /// Also write the scores as JSON to this file.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct HistArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// Box annotations: one {image_id, class_name, x0, y0, x1, y1} per line.
    #[arg(long)]
    pub boxes: PathBuf,
    /// Comma-separated class names; defaults to every class in --boxes.
    #[arg(long, value_delimiter = ',')]
    pub classes: Vec<String>,
    #[arg(long, default_value_t = DEFAULT_HISTOGRAM_BINS)]
    pub bins: usize,
    /// Half-width of the square histogram range.
    #[arg(long, default_value_t = DEFAULT_HISTOGRAM_EXTENT)]
    pub extent: f64,
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LabelmapArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// Mask library: one {class, kind, width, height, rle} per line.
    #[arg(long)]
    pub library: PathBuf,
    /// Directory receiving `<n>.pgm` and `<n>.legend.tsv` per narrative.
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 64)]
    pub width: usize,
    #[arg(long, default_value_t = 64)]
    pub height: usize,
}
