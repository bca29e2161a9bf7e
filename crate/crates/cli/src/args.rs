use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use orchestrakit::expressive::AnnotationMode;

#[derive(Debug, Parser)]
#[command(name = "orchestrakit", version, about = "Build expressive, render-ready orchestral MIDI corpora")]
pub struct Cli {
    /// Pipeline configuration (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed; overrides the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Annotation mode; overrides the config.
    #[arg(long, global = true, value_enum)]
    pub mode: Option<ModeArg>,
    /// Fail on the first bad file instead of logging and skipping it.
    #[arg(long, global = true)]
    pub strict: bool,
    /// Worker threads (0 = one per core). Never affects outputs.
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Plain,
    Proposed,
}

impl From<ModeArg> for AnnotationMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Plain => AnnotationMode::Plain,
            ModeArg::Proposed => AnnotationMode::Proposed,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Map instrument names to GM programs, then filter and deduplicate.
    Fix {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Reset velocities to 75 and tempo to 120 BPM.
    Normalize {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Add random tempo, dynamics and articulation intervals.
    Annotate {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Per-instrument activity time and polyphony histograms.
    Stats {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Stratified train/eval/test split by instrument presence.
    Split {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Render manifests for an external synthesizer.
    Manifest {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Render stems and mixtures with the built-in test synthesizer.
    SynthTest {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Frame-wise SDR of estimated stems against reference stems.
    Eval {
        /// Directory of `<piece>/stems/<stem>.wav` (and `<piece>/mixture.wav`).
        #[arg(long)]
        references: PathBuf,
        /// Directory laid out like `references`; required unless `--estimate mixture`.
        #[arg(long)]
        estimates: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = EstimateSource::Stems)]
        estimate: EstimateSource,
        /// Directory for `sdr.json`.
        #[arg(long)]
        output: PathBuf,
    },
    /// fix, normalize, annotate, stats, split and manifest in one run.
    Pipeline {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EstimateSource {
    /// Separated stems under `--estimates`.
    Stems,
    /// The unprocessed mixture, scored against every stem.
    Mixture,
}
