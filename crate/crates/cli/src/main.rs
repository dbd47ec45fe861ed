use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod params;

/// Frequency-wise domain generalization pipeline for sound event detection.
///
/// Reports go to stdout; diagnostics and the resolved configuration go to stderr.
/// Exit status: 0 success, 1 usage or configuration error, 2 data error.
#[derive(Debug, Parser)]
#[command(name = "freqdg", version)]
pub struct Cli {
    /// Seed for every stochastic step
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// File of `key=value` lines supplying any flag of the subcommand
    #[arg(long, global = true, value_name = "FILE")]
    pub params: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Log-mel features for every WAV file of a directory
    Features(FeaturesArgs),
    /// Per-instance frequency or channel statistics of a feature file
    Stats(StatsArgs),
    /// Freq-MixStyle augmentation of a feature file
    Augment(AugmentArgs),
    /// cSEBB post-processing of frame-level scores
    Postprocess(PostprocessArgs),
    /// Grid search of cSEBB parameters for the best PSDS
    TuneSebb(TuneArgs),
    /// PSDS and/or mpAUC of a system output
    Evaluate(EvaluateArgs),
}

#[derive(Debug, Args)]
pub struct FeaturesArgs {
    /// WAV file or directory of WAV files (processed in name order)
    #[arg(long = "in", value_name = "PATH")]
    pub input: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 128)]
    pub n_mels: usize,
    /// Domain tag stored with every clip
    #[arg(long, value_enum, default_value_t = Domain::Desed)]
    pub domain: Domain,
    /// Zero-pad shorter clips to this many seconds (0 disables)
    #[arg(long, default_value_t = 10.0)]
    pub pad_seconds: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Domain {
    Desed,
    Maestro,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Axis {
    Freq,
    Channel,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long = "in", value_name = "FILE")]
    pub input: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = Axis::Freq)]
    pub axis: Axis,
}

#[derive(Debug, Args)]
pub struct AugmentArgs {
    #[arg(long = "in", value_name = "FILE")]
    pub input: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    /// Probability of restyling a batch
    #[arg(long, default_value_t = 0.5)]
    pub p: f64,
    /// Beta(alpha, alpha) parameter of the mixing weight
    #[arg(long, default_value_t = 0.6)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1e-5)]
    pub eps: f64,
    /// Items per mini-batch; 0 treats the whole file as one batch
    #[arg(long, default_value_t = 0)]
    pub batch_size: usize,
}

#[derive(Debug, Args)]
pub struct PostprocessArgs {
    #[arg(long, value_name = "FILE")]
    pub scores: PathBuf,
    /// cSEBB parameters (TOML); defaults are used when omitted
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    /// Keep only boxes with confidence >= this value and drop the confidence
    /// column; without it every box is written with its confidence
    #[arg(long)]
    pub threshold: Option<f64>,
}

#[derive(Debug, Args)]
pub struct TuneArgs {
    #[arg(long, value_name = "FILE")]
    pub scores: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub truth: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub durations: PathBuf,
    /// Candidate values per parameter (TOML arrays)
    #[arg(long, value_name = "FILE")]
    pub grid: PathBuf,
    /// Where to write the winning configuration (TOML)
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub psds: PsdsArgs,
}

#[derive(Debug, Clone, Args)]
pub struct PsdsArgs {
    #[arg(long, default_value_t = 0.7)]
    pub rho_dtc: f64,
    #[arg(long, default_value_t = 0.7)]
    pub rho_gtc: f64,
    #[arg(long, default_value_t = 1.0)]
    pub alpha_st: f64,
    /// Largest false-positive rate per hour integrated over
    #[arg(long, default_value_t = 100.0)]
    pub e_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Standardization {
    Mcclish,
    Raw,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Compute PSDS from --events, --truth and --durations
    #[arg(long)]
    pub psds: bool,
    /// Compute mpAUC from --segscores and --segtruth
    #[arg(long)]
    pub mpauc: bool,
    /// Detections; an optional fifth `confidence` column enables a threshold sweep
    #[arg(long, value_name = "FILE")]
    pub events: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub truth: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub durations: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub segscores: Option<PathBuf>,
    /// Segment labels; soft labels count as positive from 0.5
    #[arg(long, value_name = "FILE")]
    pub segtruth: Option<PathBuf>,
    #[arg(long, default_value_t = 0.1)]
    pub max_fpr: f64,
    #[arg(long, value_enum, default_value_t = Standardization::Mcclish)]
    pub standardization: Standardization,
    /// Source-to-target class renames applied to every input
    #[arg(long, value_name = "FILE")]
    pub class_map: Option<PathBuf>,
    /// Also write the summary as key=value lines to this file
    #[arg(long, value_name = "FILE")]
    pub result: Option<PathBuf>,
    #[command(flatten)]
    pub psds_args: PsdsArgs,
}

fn main() -> ExitCode {
    let argv = match params::splice(std::env::args_os().collect()) {
        Ok(a) => a,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(1);
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    eprintln!("freqdg: resolved configuration: {cli:?}");
    match commands::run(&cli) {
        Ok(report) => {
            print!("{report}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
