use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use hsnli_core::corpus::{
    common_languages, downsample_non_hate, hs_to_nli, read_posts, sample_n_shot, shuffle_xnli_languages,
    validate_posts, ClassCounts, DatasetManifest, LabeledPost, ParallelNliExample, SamplingMode, SamplingSpec,
    Split, ValidationMode,
};
use hsnli_core::engine::{classify_main, DecisionPolicy, HypothesisCatalog, InferenceBackend, ModelKind};
use hsnli_core::eval::{
    bootstrap_ci, bootstrap_items_ci, compare_to_reference, format_diff, macro_f1, points_from_reports,
    read_cell_records, read_reference, run_grid, write_comparison_csv, BackendKind, BackendLoader,
    BackendRegistry, CellOutcome, CellRecord, CiMode, GridConfig, GridData, GridInputs, RunOptions,
};
use hsnli_core::io;
use hsnli_core::normalize::normalize;
use hsnli_core::strategy::{
    classify_with_strategies, default_characteristics, ClassificationTrace, StrategyConfig,
};
use hsnli_core::Label;
use hsnli_onnx::FileLoader;
use serde::{Deserialize, Serialize};

use crate::{
    ClassifyArgs, CiModeArg, Command, ConvertNliArgs, EvaluateArgs, GridArgs, ModelKindArg, PolicyArg,
    PreprocessArgs, ReportArgs, SampleArgs, ShuffleXnliArgs,
};

/// Raised when an input path does not exist, before any work starts.
#[derive(Debug)]
struct MissingFile(PathBuf);

impl std::fmt::Display for MissingFile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: no such file or directory", self.0.display())
    }
}

impl std::error::Error for MissingFile {}

/// Raised when a grid finishes with failed or cancelled cells.
#[derive(Debug)]
struct IncompleteGrid(String);

impl std::fmt::Display for IncompleteGrid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for IncompleteGrid {}

/// Stable identifier of the innermost known error, for the JSON error line.
pub fn error_kind(err: &anyhow::Error) -> &'static str {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<hsnli_core::Error>() {
            return e.kind();
        }
        if cause.is::<MissingFile>() {
            return "missing_file";
        }
        if cause.is::<IncompleteGrid>() {
            return "grid_incomplete";
        }
    }
    "error"
}

fn require(path: &Path) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(MissingFile(path.to_path_buf()).into())
    }
}

fn require_all<'a>(paths: impl IntoIterator<Item = &'a Path>) -> Result<()> {
    paths.into_iter().try_for_each(require)
}

pub fn dispatch(command: Command) -> Result<ExitCode> {
    match command {
        Command::Preprocess(args) => preprocess(args),
        Command::Sample(args) => sample(args),
        Command::ConvertNli(args) => convert_nli(args),
        Command::ShuffleXnli(args) => shuffle_xnli(args),
        Command::Classify(args) => classify(args),
        Command::Evaluate(args) => evaluate(args),
        Command::Grid(args) => grid(args),
        Command::Report(args) => report(args),
    }?;
    Ok(ExitCode::SUCCESS)
}

fn print_json(value: &impl Serialize) -> Result<()> {
    println!("{}", serde_json::to_string(value)?);
    Ok(())
}

fn preprocess(args: PreprocessArgs) -> Result<()> {
    require_all([args.input.as_path()].into_iter().chain(args.manifest.as_deref()))?;
    let manifest = args.manifest.as_deref().map(DatasetManifest::load).transpose()?;
    let mode = if args.strict {
        ValidationMode::Strict
    } else {
        ValidationMode::Lenient
    };
    let mut posts = read_posts(&args.input)?;
    for post in &mut posts {
        post.text = normalize(&post.text);
    }
    if let Some(ratio) = args.downsample_non_hate {
        posts = downsample_non_hate(&posts, ratio, args.seed, mode)?;
    }
    let loaded = validate_posts(posts, manifest.as_ref(), mode)?;
    for warning in &loaded.warnings {
        eprintln!("warning: {warning}");
    }
    io::write_jsonl(&args.out, &loaded.posts)?;
    print_json(&serde_json::json!({
        "records": loaded.posts.len(),
        "stats": loaded.stats,
        "hate_fraction": loaded.stats.hate_fraction(),
        "warnings": loaded.warnings,
    }))
}

#[derive(Serialize)]
struct SampleMeta<'a> {
    source: &'a Path,
    split: Split,
    n: usize,
    seed: u64,
    mode: SamplingMode,
    class_counts: ClassCounts,
}

fn meta_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".meta.json");
    out.with_file_name(name)
}

fn sample(args: SampleArgs) -> Result<()> {
    require(&args.input)?;
    let split: Split = args.split.parse().map_err(|e: String| anyhow!(e))?;
    let mode = if args.stratified {
        SamplingMode::Stratified
    } else {
        SamplingMode::Uniform
    };
    let posts: Vec<LabeledPost> = read_posts(&args.input)?.into_iter().filter(|p| p.split == split).collect();
    let drawn = sample_n_shot(&posts, SamplingSpec { n: args.n, seed: args.seed }, mode)
        .with_context(|| format!("sampling the {split} split of {}", args.input.display()))?;
    let meta = SampleMeta {
        source: &args.input,
        split,
        n: args.n,
        seed: args.seed,
        mode,
        class_counts: drawn.class_counts,
    };
    io::write_jsonl(&args.out, &drawn.posts)?;
    io::write_json(&meta_path(&args.out), &meta)?;
    print_json(&meta)
}

fn convert_nli(args: ConvertNliArgs) -> Result<()> {
    require(&args.input)?;
    let posts = read_posts(&args.input)?;
    let examples = hs_to_nli(&posts, &args.hypothesis, &args.hypothesis_language)?;
    io::write_jsonl(&args.out, &examples)?;
    print_json(&serde_json::json!({ "examples": examples.len() }))
}

fn shuffle_xnli(args: ShuffleXnliArgs) -> Result<()> {
    require(&args.input)?;
    let corpus: Vec<ParallelNliExample> = io::read_jsonl(&args.input)?;
    let languages = if args.languages.is_empty() {
        common_languages(&corpus)
    } else {
        args.languages
    };
    let examples = shuffle_xnli_languages(&corpus, &languages, args.seed)?;
    let mismatched = examples.iter().filter(|e| e.premise_language != e.hypothesis_language).count();
    io::write_jsonl(&args.out, &examples)?;
    print_json(&serde_json::json!({
        "examples": examples.len(),
        "languages": languages,
        "mismatched_fraction": if examples.is_empty() { 0.0 } else { mismatched as f64 / examples.len() as f64 },
    }))
}

/// A post to classify; extra fields (label, split, ...) are ignored.
#[derive(Deserialize)]
struct ClassifyInput {
    id: String,
    text: String,
    #[serde(default)]
    language: Option<String>,
}

fn policy_of(policy: PolicyArg, threshold: f64) -> Result<DecisionPolicy> {
    let policy = match policy {
        PolicyArg::Argmax => DecisionPolicy::Argmax,
        PolicyArg::Threshold => DecisionPolicy::RenormalizedThreshold { threshold },
    };
    policy.validate()?;
    Ok(policy)
}

fn load_catalog(path: Option<&Path>) -> Result<HypothesisCatalog> {
    Ok(match path {
        Some(p) => HypothesisCatalog::load(p)?,
        None => HypothesisCatalog::english_default(&default_characteristics()),
    })
}

fn open_backend(mock: Option<&Path>, model_dir: Option<&Path>) -> Result<Option<Arc<dyn InferenceBackend>>> {
    let (kind, path) = match (mock, model_dir) {
        (Some(p), _) => (BackendKind::Mock, p),
        (None, Some(p)) => (BackendKind::Onnx, p),
        (None, None) => return Ok(None),
    };
    Ok(Some(FileLoader.load(kind, path)?))
}

fn classify(args: ClassifyArgs) -> Result<()> {
    let main_path = args.backend.as_deref().or(args.model_dir.as_deref());
    let Some(main_path) = main_path else {
        bail!("one of --backend or --model-dir (or ${}) is required", crate::MODEL_DIR_ENV);
    };
    require_all(
        [args.input.as_path(), main_path]
            .into_iter()
            .chain(args.aux_backend.as_deref())
            .chain(args.aux_model_dir.as_deref())
            .chain(args.catalog.as_deref())
            .chain(args.strategies.as_deref()),
    )?;
    let policy = policy_of(args.policy, args.threshold)?;
    let kind = match args.model_kind {
        ModelKindArg::Monolingual => ModelKind::Monolingual,
        ModelKindArg::Multilingual => ModelKind::Multilingual,
    };
    let catalog = load_catalog(args.catalog.as_deref())?;
    let strategies = args.strategies.as_deref().map(StrategyConfig::load).transpose()?;
    let inputs: Vec<ClassifyInput> = io::read_jsonl(&args.input)?;
    let main = open_backend(args.backend.as_deref(), args.model_dir.as_deref())?
        .ok_or_else(|| anyhow!("no main backend"))?;
    let aux = open_backend(args.aux_backend.as_deref(), args.aux_model_dir.as_deref())?
        .unwrap_or_else(|| Arc::clone(&main));

    let mut traces = Vec::with_capacity(inputs.len());
    for input in &inputs {
        let language = args
            .language
            .as_deref()
            .or(input.language.as_deref())
            .ok_or_else(|| anyhow!("post {}: no language (set --language or a `language` field)", input.id))?;
        let trace = match &strategies {
            Some(config) => classify_with_strategies(
                &input.id,
                &input.text,
                language,
                main.as_ref(),
                aux.as_ref(),
                &catalog,
                &policy,
                config,
                kind,
            ),
            None => classify_main(main.as_ref(), &catalog, &policy, &input.text, language, kind)
                .map(|m| ClassificationTrace::standard(input.id.clone(), m)),
        }
        .with_context(|| format!("post {}", input.id))?;
        traces.push(trace);
    }
    io::write_jsonl(&args.out, &traces)?;
    let hate = traces.iter().filter(|t| t.final_label == Label::Hate).count();
    let filtered = traces.iter().filter(|t| !t.fired_filters.is_empty()).count();
    print_json(&serde_json::json!({
        "inputs": traces.len(),
        "hate": hate,
        "not_hate": traces.len() - hate,
        "filtered": filtered,
    }))
}

#[derive(Deserialize)]
struct LabelRecord {
    #[serde(alias = "input_id")]
    id: String,
    #[serde(alias = "final_label")]
    label: Label,
}

fn aligned_predictions(path: &Path, gold_ids: &[String]) -> Result<Vec<Label>> {
    let records: Vec<LabelRecord> = io::read_jsonl(path)?;
    let mut by_id: HashMap<String, Label> = HashMap::with_capacity(records.len());
    for r in records {
        if by_id.insert(r.id.clone(), r.label).is_some() {
            bail!("{}: duplicate prediction for `{}`", path.display(), r.id);
        }
    }
    if by_id.len() != gold_ids.len() {
        bail!(
            "{}: {} predictions for {} gold items",
            path.display(),
            by_id.len(),
            gold_ids.len()
        );
    }
    gold_ids
        .iter()
        .map(|id| {
            by_id
                .get(id)
                .copied()
                .ok_or_else(|| anyhow!("{}: no prediction for `{id}`", path.display()))
        })
        .collect()
}

#[derive(Serialize)]
struct RunScore<'a> {
    predictions: &'a Path,
    macro_f1: f64,
    per_class_f1: BTreeMap<Label, f64>,
    absent_classes: Vec<Label>,
}

fn evaluate(args: EvaluateArgs) -> Result<()> {
    require_all([args.gold.as_path()].into_iter().chain(args.preds.iter().map(PathBuf::as_path)))?;
    let gold_records: Vec<LabelRecord> = io::read_jsonl(&args.gold)?;
    let gold_ids: Vec<String> = gold_records.iter().map(|r| r.id.clone()).collect();
    let gold: Vec<Label> = gold_records.iter().map(|r| r.label).collect();
    let runs = args
        .preds
        .iter()
        .map(|p| aligned_predictions(p, &gold_ids))
        .collect::<Result<Vec<_>>>()?;
    let mut scores = Vec::with_capacity(runs.len());
    for (path, preds) in args.preds.iter().zip(&runs) {
        let m = macro_f1(preds, &gold)?;
        scores.push(RunScore {
            predictions: path,
            macro_f1: m.macro_f1,
            per_class_f1: m.per_class,
            absent_classes: m.absent_classes,
        });
    }
    let values: Vec<f64> = scores.iter().map(|s| s.macro_f1).collect();
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let (ci_mode, ci) = match args.ci_mode {
        CiModeArg::Runs => (CiMode::Runs, bootstrap_ci(&values, args.resamples, args.alpha, args.seed)?),
        CiModeArg::Items => (
            CiMode::Items,
            bootstrap_items_ci(&runs, &gold, args.resamples, args.alpha, args.seed)?,
        ),
    };
    let summary = serde_json::json!({
        "macro_f1": mean,
        "ci_low": ci.low,
        "ci_high": ci.high,
        "ci_mode": ci_mode,
        "resamples": args.resamples,
        "alpha": args.alpha,
        "seed": args.seed,
        "test_size": gold.len(),
        "runs": scores,
    });
    if let Some(out) = &args.out {
        io::write_json(out, &summary)?;
    }
    print_json(&summary)
}

fn grid(args: GridArgs) -> Result<()> {
    require(&args.config)?;
    let mut config = GridConfig::load(&args.config)?;
    if let Some(v) = args.runs {
        config.runs = v;
    }
    if let Some(v) = args.resamples {
        config.resamples = v;
    }
    if let Some(v) = args.alpha {
        config.alpha = v;
    }
    if let Some(v) = args.seed {
        config.seed = v;
    }
    if let Some(v) = args.ci_mode {
        config.ci_mode = match v {
            CiModeArg::Runs => CiMode::Runs,
            CiModeArg::Items => CiMode::Items,
        };
    }
    if let Some(v) = args.n_shots {
        config.n_shots = v;
    }
    if let Some(v) = args.languages {
        config.languages = v;
    }
    if args.catalog.is_some() {
        config.catalog = args.catalog;
    }
    if args.strategies.is_some() {
        config.strategies = args.strategies;
    }
    config.export_samples |= args.export_samples;
    config.validate()?;

    let mut referenced: Vec<&Path> = Vec::new();
    referenced.extend(config.catalog.as_deref());
    referenced.extend(config.strategies.as_deref());
    require_all(referenced)?;
    let catalog = load_catalog(config.catalog.as_deref())?;
    let strategies = match config.strategies.as_deref() {
        Some(p) => StrategyConfig::load(p)?,
        None => StrategyConfig::default(),
    };

    let data = GridData::load(&config);
    let registry = BackendRegistry::new(config.backends.clone(), &FileLoader);
    let inputs = GridInputs {
        config: &config,
        data: &data,
        registry: &registry,
        catalog: &catalog,
        strategies: &strategies,
    };
    let quiet = args.quiet;
    let progress = move |outcome: &CellOutcome| {
        if quiet {
            return;
        }
        match outcome {
            CellOutcome::Computed(r) => eprintln!("done    {} macro_f1={:.4}", r.key, r.macro_f1),
            CellOutcome::Resumed(r) => eprintln!("resumed {} macro_f1={:.4}", r.key, r.macro_f1),
            CellOutcome::Failed { key, error } => eprintln!("failed  {key}: {error}"),
            CellOutcome::Cancelled { key } => eprintln!("skipped {key}"),
        }
    };
    let options = RunOptions {
        results_dir: Some(&args.out),
        jobs: args.jobs,
        cancel: None,
        on_cell_done: Some(&progress),
    };
    let outcome = run_grid(&inputs, &options)?;
    print_json(&serde_json::json!({
        "cells": outcome.cells.len(),
        "computed": outcome.computed(),
        "resumed": outcome.resumed(),
        "failed": outcome.failed(),
        "cancelled": outcome.cancelled(),
        "report": args.out.join("report.csv"),
        "records": args.out.join("cells.jsonl"),
    }))?;
    if !outcome.is_complete() {
        return Err(IncompleteGrid(format!(
            "{} of {} cells failed; see {}",
            outcome.failed() + outcome.cancelled(),
            outcome.cells.len(),
            args.out.join("cells.jsonl").display()
        ))
        .into());
    }
    Ok(())
}

fn report(args: ReportArgs) -> Result<()> {
    let records_path = args.results.join("cells.jsonl");
    let reference_path = if args.reference.is_dir() {
        args.reference.join("table1.csv")
    } else {
        args.reference.clone()
    };
    require_all([records_path.as_path(), reference_path.as_path()])?;
    let reports: Vec<_> = read_cell_records(&records_path)?
        .into_iter()
        .filter_map(|r| match r {
            CellRecord::Ok(report) => Some(report),
            CellRecord::Failed { .. } => None,
        })
        .collect();
    let reference = read_reference(&reference_path)?;
    let comparison = compare_to_reference(&points_from_reports(&reports), &reference)?;
    for warning in &comparison.warnings {
        eprintln!("warning: {warning}");
    }
    write_comparison_csv(&args.out, &comparison)?;
    let overall: BTreeMap<&str, String> = comparison
        .tables
        .iter()
        .map(|t| (t.block.as_str(), t.overall.map(format_diff).unwrap_or_default()))
        .collect();
    print_json(&serde_json::json!({
        "tables": comparison.tables.len(),
        "avg_diff": overall,
        "warnings": comparison.warnings,
        "out": args.out,
    }))
}
