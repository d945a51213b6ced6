//! Command-line front end.
//!
//! Every subcommand writes machine-readable results to standard output and
//! one-line progress messages to standard error. Exit status is `0` on
//! success, `1` when some inputs failed but the run completed, and `2` for
//! invalid input or configuration.
//!
//! Options may also come from a `key=value` file given with
//! `--config <path>`; keys are long option names (`_` and `-` are
//! interchangeable). Command-line flags win over the file, and the file wins
//! over built-in defaults.

mod commands;
mod config;

pub use commands::{parse_manifest, score_directory};

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{ArgAction, Args, CommandFactory, FromArgMatches, Parser, Subcommand};

use crate::corpus::AttackKind;
use crate::error::Error;
use crate::features::FeatureKind;
use crate::lcnn::{Scale, ScoreMethod};

pub const EXIT_OK: i32 = 0;
pub const EXIT_PARTIAL: i32 = 1;
pub const EXIT_INVALID: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "antispoof",
    version,
    about = "Spoofing countermeasure toolkit: features, LCNN training, scoring, evaluation and fusion"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic genuine/spoof corpus (WAV files + protocol).
    Synth(SynthArgs),
    /// Extract fixed-size feature matrices from every WAV file in a directory.
    Extract(ExtractArgs),
    /// Train an LCNN with an angular-margin head.
    Train(TrainArgs),
    /// Score every feature file with a trained checkpoint.
    Score(ScoreArgs),
    /// Compute EER (%) and min t-DCF of a score file.
    Evaluate(EvaluateArgs),
    /// Fuse several score files with genuine-std normalization.
    Fuse(FuseArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Preset {
    /// Reference geometry (863-row FFT/CQT/DCT features).
    Reference,
    /// Reduced geometry for 1/8-scale networks (107 rows).
    Desk,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 100)]
    pub n_genuine: usize,
    #[arg(long, default_value_t = 100)]
    pub n_spoof: usize,
    /// Utterance length in seconds.
    #[arg(long, default_value_t = 1.0)]
    pub duration: f64,
    #[arg(long, default_value_t = 16_000)]
    pub sample_rate: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Comma-separated subset of channel_ir, bandlimit, quantize.
    #[arg(long, value_delimiter = ',', value_parser = parse_from_str::<AttackKind>, default_value = "channel_ir,bandlimit,quantize")]
    pub attacks: Vec<AttackKind>,
    #[arg(long, default_value = "T")]
    pub id_prefix: String,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    #[arg(long)]
    pub in_dir: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// fft, cqt, dct or lfcc.
    #[arg(long, value_parser = parse_from_str::<FeatureKind>, default_value = "fft")]
    pub features: FeatureKind,
    #[arg(long, value_enum, default_value = "reference")]
    pub preset: Preset,
    /// Per-utterance mean and variance normalization.
    #[arg(long, num_args = 0..=1, default_missing_value = "true", default_value_t = false, action = ArgAction::Set)]
    pub cmvn: bool,
    /// Drop low-energy frames before cropping.
    #[arg(long, num_args = 0..=1, default_missing_value = "true", default_value_t = false, action = ArgAction::Set)]
    pub sad: bool,
    /// Output frame count (crop, or repeat cyclically).
    #[arg(long, default_value_t = 600)]
    pub frames: usize,
    /// Override the analysis window length in samples.
    #[arg(long)]
    pub window_len: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub features_dir: PathBuf,
    /// Labeled training trials.
    #[arg(long)]
    pub protocol: PathBuf,
    /// Labeled dev trials, evaluated after every epoch.
    #[arg(long)]
    pub dev_protocol: Option<PathBuf>,
    /// Directory holding the dev features (defaults to --features-dir).
    #[arg(long)]
    pub dev_features_dir: Option<PathBuf>,
    /// Width multiplier, e.g. 1, 1/8 or 0.125.
    #[arg(long, value_parser = parse_from_str::<Scale>, default_value = "1")]
    pub scale: Scale,
    #[arg(long, default_value_t = 4)]
    pub margin: u32,
    #[arg(long, default_value_t = 20)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 32)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 0.01)]
    pub lr: f64,
    #[arg(long, default_value_t = 0.9)]
    pub momentum: f64,
    #[arg(long, default_value_t = 0.0)]
    pub weight_decay: f64,
    /// Epochs without a dev-EER improvement before the learning rate decays.
    #[arg(long, default_value_t = 2)]
    pub patience: usize,
    #[arg(long, default_value_t = 0.5)]
    pub lr_decay: f64,
    /// Drop probability before FC_29.
    #[arg(long, default_value_t = crate::lcnn::DEFAULT_DROPOUT)]
    pub dropout: f64,
    /// Apply the margin function to non-target logits as well.
    #[arg(long, num_args = 0..=1, default_missing_value = "true", default_value_t = false, action = ArgAction::Set)]
    pub strict_margin: bool,
    /// key=value t-DCF parameters for the dev metric.
    #[arg(long)]
    pub tdcf_params: Option<PathBuf>,
    #[arg(long)]
    pub ckpt_out: PathBuf,
    /// Also write the training log to this file.
    #[arg(long)]
    pub log: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[arg(long)]
    pub ckpt: PathBuf,
    #[arg(long)]
    pub features_dir: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_parser = parse_score_method, default_value = "cosine")]
    pub score_method: ScoreMethod,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub scores: PathBuf,
    #[arg(long)]
    pub protocol: PathBuf,
    #[arg(long)]
    pub tdcf_params: Option<PathBuf>,
    /// Print per-class score histograms after the metrics.
    #[arg(long, num_args = 0..=1, default_missing_value = "true", default_value_t = false, action = ArgAction::Set)]
    pub hist: bool,
    #[arg(long, default_value_t = 20)]
    pub hist_bins: usize,
}

#[derive(Debug, Args)]
pub struct FuseArgs {
    /// One system per line: `system_id path` or just `path`.
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub dev_protocol: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_from_str<T>(s: &str) -> Result<T, String>
where
    T: std::str::FromStr<Err = Error>,
{
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_score_method(s: &str) -> Result<ScoreMethod, String> {
    match s {
        "cosine" => Ok(ScoreMethod::Cosine),
        "logit" => Ok(ScoreMethod::Logit),
        other => Err(format!(
            "unknown score method '{other}' (expected cosine or logit)"
        )),
    }
}

/// Parses `args` (program name first) and runs the command against the
/// process's standard streams.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(args, &mut stdout.lock(), &mut stderr.lock())
}

/// Like [`run`] with explicit output streams.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let args = match config::expand_config(args) {
        Ok(a) => a,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_INVALID;
        }
    };
    let command = Cli::command().mut_subcommands(|c| c.args_override_self(true));
    let cli = match command
        .try_get_matches_from(args)
        .and_then(|m| Cli::from_arg_matches(&m))
    {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() {
                EXIT_INVALID
            } else {
                EXIT_OK
            };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(err, "{text}")
            } else {
                write!(out, "{text}")
            };
            return code;
        }
    };
    let result = match &cli.command {
        Command::Synth(a) => commands::synth(a, out, err),
        Command::Extract(a) => commands::extract(a, out, err),
        Command::Train(a) => commands::train(a, out, err),
        Command::Score(a) => commands::score(a, out, err),
        Command::Evaluate(a) => commands::evaluate(a, out, err),
        Command::Fuse(a) => commands::fuse(a, out, err),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_INVALID
        }
    }
}
