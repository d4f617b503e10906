//! `hsnli`: data preparation, NLI classification, evaluation and the
//! experiment grid behind one command.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub const MODEL_DIR_ENV: &str = "HSNLI_MODEL_DIR";
pub const REFERENCES_ENV: &str = "HSNLI_REFERENCES";

#[derive(Debug, Parser)]
#[command(name = "hsnli", version, about = "Zero- and few-shot hate speech detection as natural language inference")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Normalize URLs and user handles, optionally downsample non-hate posts
    /// and check the result against a dataset manifest.
    Preprocess(PreprocessArgs),
    /// Draw a seeded N-shot training sample from one split.
    Sample(SampleArgs),
    /// Cast binary posts as NLI pairs (hate -> entailment, not_hate -> contradiction).
    ConvertNli(ConvertNliArgs),
    /// Pair premises and hypotheses in independently drawn languages.
    ShuffleXnli(ShuffleXnliArgs),
    /// Classify posts with the main hypothesis and, optionally, the filter strategies.
    Classify(ClassifyArgs),
    /// Macro-F1 of one or more prediction files with a bootstrap interval.
    Evaluate(EvaluateArgs),
    /// Run (or resume) an experiment grid.
    Grid(GridArgs),
    /// Compare grid results against a reference table.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct PreprocessArgs {
    /// Corpus JSONL ({id, text, label, language, split} per line).
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Drop non-hate posts until the hate share reaches this fraction.
    #[arg(long, value_name = "RATIO")]
    pub downsample_non_hate: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Dataset manifest (TOML) checked against the output.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Treat manifest mismatches (and impossible downsampling) as errors.
    #[arg(long)]
    pub strict: bool,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "train")]
    pub split: String,
    /// Allocate the sample across classes proportionally instead of uniformly.
    #[arg(long)]
    pub stratified: bool,
}

#[derive(Debug, Args)]
pub struct ConvertNliArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value = hsnli_core::corpus::HATE_HYPOTHESIS)]
    pub hypothesis: String,
    #[arg(long, default_value = "en")]
    pub hypothesis_language: String,
}

#[derive(Debug, Args)]
pub struct ShuffleXnliArgs {
    /// Parallel NLI JSONL ({id, label, premise: {lang: text}, hypothesis: {lang: text}}).
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Languages to draw from; defaults to those present in every example.
    #[arg(long, value_delimiter = ',')]
    pub languages: Vec<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PolicyArg {
    /// hate iff entailment is the strict maximum.
    Argmax,
    /// hate iff e / (e + c) exceeds --threshold.
    Threshold,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModelKindArg {
    Monolingual,
    Multilingual,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    /// Mock backend table (JSONL of {match, slot, scores}).
    #[arg(long, conflicts_with = "model_dir")]
    pub backend: Option<PathBuf>,
    /// Exported model directory (model.onnx, tokenizer.json, nli_metadata.json).
    #[arg(long, env = MODEL_DIR_ENV)]
    pub model_dir: Option<PathBuf>,
    /// Mock table for the auxiliary filter hypotheses; defaults to the main backend.
    #[arg(long, conflicts_with = "aux_model_dir")]
    pub aux_backend: Option<PathBuf>,
    #[arg(long)]
    pub aux_model_dir: Option<PathBuf>,
    /// Hypothesis catalog (TOML); defaults to the built-in English catalog.
    #[arg(long)]
    pub catalog: Option<PathBuf>,
    /// Posts JSONL; each line needs `id` and `text`, and `language` unless --language is given.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Strategy config (TOML); enables the filters.
    #[arg(long)]
    pub strategies: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "argmax")]
    pub policy: PolicyArg,
    #[arg(long, default_value_t = 0.5)]
    pub threshold: f64,
    #[arg(long, value_enum, default_value = "multilingual")]
    pub model_kind: ModelKindArg,
    /// Language for every post, overriding the per-record field.
    #[arg(long)]
    pub language: Option<String>,
    /// Classification traces JSONL.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum CiModeArg {
    Runs,
    Items,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Gold JSONL with `id` and `label` per line.
    #[arg(long)]
    pub gold: PathBuf,
    /// Predictions: traces from `classify` or `{id, label}` lines; repeat once per run.
    #[arg(long = "pred", required = true)]
    pub preds: Vec<PathBuf>,
    #[arg(long, default_value_t = hsnli_core::eval::DEFAULT_RESAMPLES)]
    pub resamples: usize,
    #[arg(long, default_value_t = hsnli_core::eval::DEFAULT_ALPHA)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "runs")]
    pub ci_mode: CiModeArg,
    /// Also write the summary JSON here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    /// Grid config (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Results directory; finished cells found here are reused.
    #[arg(long)]
    pub out: PathBuf,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long)]
    pub runs: Option<usize>,
    #[arg(long)]
    pub resamples: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub ci_mode: Option<CiModeArg>,
    #[arg(long, value_delimiter = ',')]
    pub n_shots: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    pub languages: Option<Vec<String>>,
    #[arg(long)]
    pub catalog: Option<PathBuf>,
    #[arg(long)]
    pub strategies: Option<PathBuf>,
    /// Write each run's N-shot sample under <out>/samples/.
    #[arg(long)]
    pub export_samples: bool,
    /// Suppress per-cell progress lines.
    #[arg(long)]
    pub quiet: bool,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Grid results directory (reads cells.jsonl).
    #[arg(long)]
    pub results: PathBuf,
    /// Reference table CSV, or a directory holding table1.csv.
    #[arg(long, env = REFERENCES_ENV, default_value = "references/table1.csv")]
    pub reference: PathBuf,
    /// Difference tables CSV.
    #[arg(long)]
    pub out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::dispatch(cli.command) {
        Ok(code) => code,
        Err(err) => {
            let line = serde_json::json!({
                "error": commands::error_kind(&err),
                "message": format!("{err:#}"),
            });
            eprintln!("{line}");
            ExitCode::FAILURE
        }
    }
}
