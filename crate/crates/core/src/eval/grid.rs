use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bootstrap::{bootstrap_ci, bootstrap_items_ci, CiMode, Interval, DEFAULT_ALPHA, DEFAULT_RESAMPLES};
use super::metrics::macro_f1;
use super::registry::{BackendEntry, BackendRegistry};
use super::variant::{EvalMode, ModelVariant, VariantSpec};
use crate::corpus::{read_posts, sample_n_shot, ClassCounts, LabeledPost, SamplingMode, SamplingSpec, Split};
use crate::engine::{classify_main, DecisionPolicy, HypothesisCatalog};
use crate::error::{Error, Result};
use crate::io;
use crate::label::Label;
use crate::strategy::{StrategyClassifier, StrategyConfig};

pub const DEFAULT_N_SHOTS: [usize; 4] = [0, 20, 200, 2000];
pub const DEFAULT_RUNS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestSet {
    HeldOut,
    Hatecheck,
}

impl TestSet {
    pub const ALL: [TestSet; 2] = [TestSet::HeldOut, TestSet::Hatecheck];

    pub fn as_str(self) -> &'static str {
        match self {
            TestSet::HeldOut => "held_out",
            TestSet::Hatecheck => "hatecheck",
        }
    }
}

impl fmt::Display for TestSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetRef {
    pub code: String,
    pub path: PathBuf,
}

/// Target-language data: the held-out corpus (train split is the N-shot
/// pool, test split the held-out test set) and optionally a HateCheck suite.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LanguageDatasets {
    pub held_out: DatasetRef,
    #[serde(default)]
    pub hatecheck: Option<DatasetRef>,
}

fn default_n_shots() -> Vec<usize> {
    DEFAULT_N_SHOTS.to_vec()
}
fn default_test_sets() -> Vec<TestSet> {
    TestSet::ALL.to_vec()
}
fn default_runs() -> usize {
    DEFAULT_RUNS
}
fn default_alpha() -> f64 {
    DEFAULT_ALPHA
}
fn default_resamples() -> usize {
    DEFAULT_RESAMPLES
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub variants: Vec<VariantSpec>,
    pub languages: Vec<String>,
    #[serde(default = "default_n_shots")]
    pub n_shots: Vec<usize>,
    #[serde(default = "default_test_sets")]
    pub test_sets: Vec<TestSet>,
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_resamples")]
    pub resamples: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub ci_mode: CiMode,
    #[serde(default)]
    pub sampling: SamplingMode,
    /// Write each run's N-shot sample under `samples/` for external training.
    #[serde(default)]
    pub export_samples: bool,
    #[serde(default)]
    pub policy: DecisionPolicy,
    #[serde(default)]
    pub datasets: BTreeMap<String, LanguageDatasets>,
    #[serde(default)]
    pub backends: Vec<BackendEntry>,
    #[serde(default)]
    pub catalog: Option<PathBuf>,
    #[serde(default)]
    pub strategies: Option<PathBuf>,
}

impl GridConfig {
    /// Reads a TOML grid config; relative paths are resolved against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let mut config: GridConfig = io::read_toml(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let rebase = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for data in config.datasets.values_mut() {
            rebase(&mut data.held_out.path);
            if let Some(hc) = &mut data.hatecheck {
                rebase(&mut hc.path);
            }
        }
        for entry in &mut config.backends {
            rebase(&mut entry.path);
        }
        config.catalog.as_mut().map(rebase);
        config.strategies.as_mut().map(rebase);
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.variants.is_empty()
            || self.languages.is_empty()
            || self.n_shots.is_empty()
            || self.test_sets.is_empty()
        {
            return Err(Error::Empty(
                "grid has no cells: variants, languages, n_shots and test_sets must be non-empty".into(),
            ));
        }
        if self.runs == 0 {
            return Err(Error::Config("runs must be at least 1".into()));
        }
        if self.resamples == 0 || !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config("resamples must be >= 1 and alpha in (0, 1)".into()));
        }
        for spec in &self.variants {
            spec.validate()?;
        }
        let unique = |n: usize, what: &str| {
            if n == 0 {
                Ok(())
            } else {
                Err(Error::Config(format!("duplicate {what} in grid config")))
            }
        };
        unique(self.variants.len() - self.variants.iter().collect::<BTreeSet<_>>().len(), "variants")?;
        unique(self.languages.len() - self.languages.iter().collect::<BTreeSet<_>>().len(), "languages")?;
        unique(self.n_shots.len() - self.n_shots.iter().collect::<BTreeSet<_>>().len(), "n_shots")?;
        unique(self.test_sets.len() - self.test_sets.iter().collect::<BTreeSet<_>>().len(), "test_sets")?;
        self.policy.validate()
    }

    /// All cells in canonical order: variant, language, test set, N.
    pub fn cells(&self) -> Vec<CellKey> {
        let mut cells = Vec::new();
        for spec in &self.variants {
            for language in &self.languages {
                for &test_set in &self.test_sets {
                    for &n_shot in &self.n_shots {
                        cells.push(CellKey {
                            variant: spec.variant,
                            mode: spec.mode,
                            language: language.clone(),
                            n_shot,
                            test_set,
                        });
                    }
                }
            }
        }
        cells
    }
}

/// One report cell; it aggregates `runs` per-seed evaluations.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CellKey {
    pub variant: ModelVariant,
    pub mode: EvalMode,
    pub language: String,
    pub n_shot: usize,
    pub test_set: TestSet,
}

impl CellKey {
    pub fn spec(&self) -> VariantSpec {
        VariantSpec {
            variant: self.variant,
            mode: self.mode,
        }
    }

    /// File-name-safe identifier.
    pub fn slug(&self) -> String {
        format!(
            "{}__{}__{}__n{}__{}",
            self.variant.tag().replace('+', "_"),
            self.mode.as_str(),
            self.language,
            self.n_shot,
            self.test_set
        )
    }
}

impl fmt::Display for CellKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} / {} / N={} / {}",
            self.spec().label(),
            self.language,
            self.n_shot,
            self.test_set
        )
    }
}

/// A single per-seed evaluation inside a cell.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExperimentCell {
    #[serde(flatten)]
    pub key: CellKey,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub seed: u64,
    pub backend: String,
    pub macro_f1: f64,
    pub per_class_f1: BTreeMap<Label, f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub absent_classes: Vec<Label>,
    /// Class counts of the N-shot sample; absent for N = 0.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train_counts: Option<ClassCounts>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    #[serde(flatten)]
    pub key: CellKey,
    pub dataset: String,
    pub test_size: usize,
    /// Mean macro-F1 over runs.
    pub macro_f1: f64,
    pub per_class_f1: BTreeMap<Label, f64>,
    pub ci_low: f64,
    pub ci_high: f64,
    pub ci_mode: CiMode,
    pub runs: usize,
    pub run_results: Vec<RunResult>,
    pub fingerprint: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CellOutcome {
    Computed(CellReport),
    Resumed(CellReport),
    Failed { key: CellKey, error: String },
    Cancelled { key: CellKey },
}

impl CellOutcome {
    pub fn key(&self) -> &CellKey {
        match self {
            CellOutcome::Computed(r) | CellOutcome::Resumed(r) => &r.key,
            CellOutcome::Failed { key, .. } | CellOutcome::Cancelled { key } => key,
        }
    }

    pub fn report(&self) -> Option<&CellReport> {
        match self {
            CellOutcome::Computed(r) | CellOutcome::Resumed(r) => Some(r),
            _ => None,
        }
    }
}

/// Long-form record, one per cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum CellRecord {
    Ok(CellReport),
    Failed {
        #[serde(flatten)]
        key: CellKey,
        error: String,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridOutcome {
    pub cells: Vec<CellOutcome>,
}

impl GridOutcome {
    pub fn reports(&self) -> impl Iterator<Item = &CellReport> {
        self.cells.iter().filter_map(CellOutcome::report)
    }

    pub fn count(&self, pred: impl Fn(&CellOutcome) -> bool) -> usize {
        self.cells.iter().filter(|c| pred(c)).count()
    }

    pub fn computed(&self) -> usize {
        self.count(|c| matches!(c, CellOutcome::Computed(_)))
    }

    pub fn resumed(&self) -> usize {
        self.count(|c| matches!(c, CellOutcome::Resumed(_)))
    }

    pub fn failed(&self) -> usize {
        self.count(|c| matches!(c, CellOutcome::Failed { .. }))
    }

    pub fn cancelled(&self) -> usize {
        self.count(|c| matches!(c, CellOutcome::Cancelled { .. }))
    }

    pub fn is_complete(&self) -> bool {
        self.failed() == 0 && self.cancelled() == 0
    }

    pub fn records(&self) -> Vec<CellRecord> {
        self.cells
            .iter()
            .filter_map(|c| match c {
                CellOutcome::Computed(r) | CellOutcome::Resumed(r) => Some(CellRecord::Ok(r.clone())),
                CellOutcome::Failed { key, error } => Some(CellRecord::Failed {
                    key: key.clone(),
                    error: error.clone(),
                }),
                CellOutcome::Cancelled { .. } => None,
            })
            .collect()
    }
}

struct TestData {
    code: String,
    posts: Vec<LabeledPost>,
}

/// Corpora for every configured language, loaded up front. Load failures are
/// kept per entry so only the affected cells fail.
pub struct GridData {
    train: BTreeMap<String, std::result::Result<Vec<LabeledPost>, String>>,
    test: BTreeMap<(String, TestSet), std::result::Result<TestData, String>>,
    paths: BTreeMap<(String, TestSet), PathBuf>,
}

impl GridData {
    pub fn load(config: &GridConfig) -> Self {
        let mut data = GridData {
            train: BTreeMap::new(),
            test: BTreeMap::new(),
            paths: BTreeMap::new(),
        };
        for language in &config.languages {
            let Some(sets) = config.datasets.get(language) else {
                let missing = format!("no datasets configured for language `{language}`");
                data.train.insert(language.clone(), Err(missing.clone()));
                for &t in &config.test_sets {
                    data.test.insert((language.clone(), t), Err(missing.clone()));
                }
                continue;
            };
            let held_out = read_posts(&sets.held_out.path).map_err(|e| e.to_string());
            data.train.insert(
                language.clone(),
                held_out.clone().map(|posts| split_of(&posts, Split::Train)),
            );
            for &t in &config.test_sets {
                let (entry, source) = match t {
                    TestSet::HeldOut => (
                        held_out.clone().map(|p| TestData {
                            code: sets.held_out.code.clone(),
                            posts: split_of(&p, Split::Test),
                        }),
                        Some(&sets.held_out),
                    ),
                    TestSet::Hatecheck => match &sets.hatecheck {
                        Some(hc) => (
                            read_posts(&hc.path).map_err(|e| e.to_string()).map(|p| TestData {
                                code: hc.code.clone(),
                                posts: split_of(&p, Split::Test),
                            }),
                            Some(hc),
                        ),
                        None => (Err(format!("no hatecheck dataset configured for `{language}`")), None),
                    },
                };
                if let Some(src) = source {
                    data.paths.insert((language.clone(), t), src.path.clone());
                }
                data.test.insert((language.clone(), t), entry);
            }
        }
        data
    }

    /// In-memory data: `held_out` rows are split by their `split` field and
    /// every row of a hatecheck set is a test item.
    pub fn from_posts(
        held_out: BTreeMap<String, (String, Vec<LabeledPost>)>,
        hatecheck: BTreeMap<String, (String, Vec<LabeledPost>)>,
    ) -> Self {
        let mut data = GridData {
            train: BTreeMap::new(),
            test: BTreeMap::new(),
            paths: BTreeMap::new(),
        };
        for (language, (code, posts)) in held_out {
            data.train.insert(language.clone(), Ok(split_of(&posts, Split::Train)));
            data.test.insert(
                (language, TestSet::HeldOut),
                Ok(TestData {
                    code,
                    posts: split_of(&posts, Split::Test),
                }),
            );
        }
        for (language, (code, posts)) in hatecheck {
            data.test.insert((language, TestSet::Hatecheck), Ok(TestData { code, posts }));
        }
        data
    }

    fn train(&self, language: &str) -> Result<&[LabeledPost]> {
        match self.train.get(language) {
            Some(Ok(posts)) => Ok(posts),
            Some(Err(e)) => Err(Error::Config(e.clone())),
            None => Err(Error::Config(format!("no training data for language `{language}`"))),
        }
    }

    fn test(&self, language: &str, test_set: TestSet) -> Result<&TestData> {
        match self.test.get(&(language.to_string(), test_set)) {
            Some(Ok(data)) => Ok(data),
            Some(Err(e)) => Err(Error::Config(e.clone())),
            None => Err(Error::Config(format!("no {test_set} data for language `{language}`"))),
        }
    }
}

fn split_of(posts: &[LabeledPost], split: Split) -> Vec<LabeledPost> {
    posts.iter().filter(|p| p.split == split).cloned().collect()
}

/// Everything a grid run reads.
pub struct GridInputs<'a> {
    pub config: &'a GridConfig,
    pub data: &'a GridData,
    pub registry: &'a BackendRegistry<'a>,
    pub catalog: &'a HypothesisCatalog,
    pub strategies: &'a StrategyConfig,
}

#[derive(Default)]
pub struct RunOptions<'a> {
    /// Where per-cell results, `cells.jsonl` and `report.csv` go. Without
    /// it nothing is persisted and nothing can be resumed.
    pub results_dir: Option<&'a Path>,
    /// Worker threads; 0 lets rayon decide.
    pub jobs: usize,
    pub cancel: Option<&'a AtomicBool>,
    pub on_cell_done: Option<&'a (dyn Fn(&CellOutcome) + Sync)>,
}

/// FNV-1a over the parts, used for derived seeds and fingerprints.
pub fn fnv1a(parts: &[&[u8]]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for part in parts {
        for &byte in *part {
            hash ^= u64::from(byte);
            hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
        }
        hash ^= 0xff;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// Seed of the N-shot sample for one run. Independent of the variant so
/// every variant sees the same target-language examples.
pub fn sample_seed(base_seed: u64, language: &str, n_shot: usize, run: u64) -> u64 {
    fnv1a(&[
        &base_seed.to_le_bytes(),
        b"sample",
        language.as_bytes(),
        &(n_shot as u64).to_le_bytes(),
        &run.to_le_bytes(),
    ])
}

pub fn bootstrap_seed(base_seed: u64, key: &CellKey) -> u64 {
    fnv1a(&[&base_seed.to_le_bytes(), b"bootstrap", key.slug().as_bytes()])
}

#[derive(Serialize)]
struct FingerprintInput<'a> {
    key: &'a CellKey,
    runs: usize,
    alpha: f64,
    resamples: usize,
    seed: u64,
    ci_mode: CiMode,
    sampling: SamplingMode,
    policy: &'a DecisionPolicy,
    train_path: Option<&'a PathBuf>,
    test_path: Option<&'a PathBuf>,
    backends: Vec<Option<&'a BackendEntry>>,
    catalog: &'a HypothesisCatalog,
    strategies: Option<&'a StrategyConfig>,
}

fn fingerprint(inputs: &GridInputs<'_>, key: &CellKey) -> String {
    let config = inputs.config;
    let mut backends = Vec::new();
    for run in 0..config.runs as u64 {
        backends.push(inputs.registry.find(&key.variant, &key.language, key.n_shot, run));
        if key.mode == EvalMode::Strategies {
            let aux = key.variant.auxiliary_variant();
            backends.push(inputs.registry.find(&aux, &key.language, 0, run));
        }
    }
    let input = FingerprintInput {
        key,
        runs: config.runs,
        alpha: config.alpha,
        resamples: config.resamples,
        seed: config.seed,
        ci_mode: config.ci_mode,
        sampling: config.sampling,
        policy: &config.policy,
        train_path: inputs.data.paths.get(&(key.language.clone(), TestSet::HeldOut)),
        test_path: inputs.data.paths.get(&(key.language.clone(), key.test_set)),
        backends,
        catalog: inputs.catalog,
        strategies: (key.mode == EvalMode::Strategies).then_some(inputs.strategies),
    };
    let json = serde_json::to_vec(&input).expect("fingerprint input serializes");
    format!("{:016x}", fnv1a(&[&json]))
}

pub fn cell_path(results_dir: &Path, key: &CellKey) -> PathBuf {
    results_dir.join("cells").join(format!("{}.json", key.slug()))
}

fn load_finished(path: &Path, fingerprint: &str) -> Option<CellReport> {
    let text = std::fs::read_to_string(path).ok()?;
    let report: CellReport = serde_json::from_str(&text).ok()?;
    (report.fingerprint == fingerprint).then_some(report)
}

fn evaluate_cell(inputs: &GridInputs<'_>, key: &CellKey, fingerprint: String, results_dir: Option<&Path>) -> Result<CellReport> {
    let config = inputs.config;
    let test = inputs.data.test(&key.language, key.test_set)?;
    if test.posts.is_empty() {
        return Err(Error::Empty(format!("{} has no test items", test.code)));
    }
    let gold: Vec<Label> = test.posts.iter().map(|p| p.label).collect();
    let kind = key.variant.kind();
    let mut run_results = Vec::with_capacity(config.runs);
    let mut run_predictions = Vec::with_capacity(config.runs);

    for run in 0..config.runs as u64 {
        let train_counts = if key.n_shot > 0 {
            let pool = inputs.data.train(&key.language)?;
            let spec = SamplingSpec {
                n: key.n_shot,
                seed: sample_seed(config.seed, &key.language, key.n_shot, run),
            };
            let sample = sample_n_shot(pool, spec, config.sampling)?;
            if config.export_samples {
                if let Some(dir) = results_dir {
                    let path = dir
                        .join("samples")
                        .join(&key.language)
                        .join(format!("n{}_seed{run}.jsonl", key.n_shot));
                    if !path.exists() {
                        io::write_jsonl(&path, &sample.posts)?;
                    }
                }
            }
            Some(sample.class_counts)
        } else {
            None
        };

        let main = inputs.registry.resolve(&key.variant, &key.language, key.n_shot, run)?;
        let predictions = match key.mode {
            EvalMode::Standard => test
                .posts
                .iter()
                .map(|p| {
                    classify_main(main.as_ref(), inputs.catalog, &config.policy, &p.text, &key.language, kind)
                        .map(|m| m.label)
                })
                .collect::<Result<Vec<_>>>()?,
            EvalMode::Strategies => {
                let aux_variant = key.variant.auxiliary_variant();
                let aux = inputs.registry.resolve(&aux_variant, &key.language, 0, run)?;
                let classifier = StrategyClassifier {
                    main: main.as_ref(),
                    aux: aux.as_ref(),
                    catalog: inputs.catalog,
                    policy: &config.policy,
                    config: inputs.strategies,
                    kind,
                };
                test.posts
                    .iter()
                    .map(|p| classifier.classify(&p.id, &p.text, &key.language).map(|t| t.final_label))
                    .collect::<Result<Vec<_>>>()?
            }
        };
        let metric = macro_f1(&predictions, &gold)?;
        run_results.push(RunResult {
            seed: run,
            backend: main.identity().to_string(),
            macro_f1: metric.macro_f1,
            per_class_f1: metric.per_class,
            absent_classes: metric.absent_classes,
            train_counts,
        });
        run_predictions.push(predictions);
    }

    let scores: Vec<f64> = run_results.iter().map(|r| r.macro_f1).collect();
    let runs = scores.len() as f64;
    let mean = scores.iter().sum::<f64>() / runs;
    let mut per_class_f1 = BTreeMap::new();
    for label in Label::ALL {
        let total: f64 = run_results.iter().map(|r| r.per_class_f1[&label]).sum();
        per_class_f1.insert(label, total / runs);
    }
    let ci_seed = bootstrap_seed(config.seed, key);
    let Interval { low, high } = match config.ci_mode {
        CiMode::Runs => bootstrap_ci(&scores, config.resamples, config.alpha, ci_seed)?,
        CiMode::Items => bootstrap_items_ci(&run_predictions, &gold, config.resamples, config.alpha, ci_seed)?,
    };
    Ok(CellReport {
        key: key.clone(),
        dataset: test.code.clone(),
        test_size: gold.len(),
        macro_f1: mean,
        per_class_f1,
        ci_low: low,
        ci_high: high,
        ci_mode: config.ci_mode,
        runs: config.runs,
        run_results,
        fingerprint,
    })
}

fn run_one(inputs: &GridInputs<'_>, key: &CellKey, options: &RunOptions<'_>) -> CellOutcome {
    if options.cancel.is_some_and(|c| c.load(Ordering::SeqCst)) {
        return CellOutcome::Cancelled { key: key.clone() };
    }
    let fp = fingerprint(inputs, key);
    if let Some(dir) = options.results_dir {
        if let Some(done) = load_finished(&cell_path(dir, key), &fp) {
            return CellOutcome::Resumed(done);
        }
    }
    let result = evaluate_cell(inputs, key, fp, options.results_dir).and_then(|report| {
        if let Some(dir) = options.results_dir {
            io::write_json(&cell_path(dir, key), &report)?;
        }
        Ok(report)
    });
    match result {
        Ok(report) => CellOutcome::Computed(report),
        Err(e) => CellOutcome::Failed {
            key: key.clone(),
            error: e.to_string(),
        },
    }
}

/// Evaluates every cell of the grid. Failed cells are reported, not fatal;
/// finished cells found in `results_dir` with a matching fingerprint are
/// reused. Results are independent of `jobs`.
pub fn run_grid(inputs: &GridInputs<'_>, options: &RunOptions<'_>) -> Result<GridOutcome> {
    inputs.config.validate()?;
    inputs.strategies.validate()?;
    let cells = inputs.config.cells();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.jobs)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let outcomes: Vec<CellOutcome> = pool.install(|| {
        cells
            .par_iter()
            .map(|key| {
                let outcome = run_one(inputs, key, options);
                if let Some(callback) = options.on_cell_done {
                    callback(&outcome);
                }
                outcome
            })
            .collect()
    });
    let outcome = GridOutcome { cells: outcomes };
    if let Some(dir) = options.results_dir {
        io::write_jsonl(&dir.join("cells.jsonl"), &outcome.records())?;
        let reports: Vec<&CellReport> = outcome.reports().collect();
        write_report_csv(&dir.join("report.csv"), &reports)?;
    }
    Ok(outcome)
}

pub fn read_cell_records(path: &Path) -> Result<Vec<CellRecord>> {
    io::read_jsonl(path)
}

/// Wide report: one row per variant (and mode), one column per
/// dataset and N, cells are mean macro-F1 to four decimals.
pub fn report_table(reports: &[&CellReport]) -> (Vec<String>, Vec<Vec<String>>) {
    let mut rows: Vec<VariantSpec> = Vec::new();
    let mut columns: Vec<(TestSet, String, String, usize)> = Vec::new();
    let mut values = BTreeMap::new();
    let mut ordered: Vec<&&CellReport> = reports.iter().collect();
    ordered.sort_by(|a, b| {
        (a.key.test_set, &a.key.language, a.key.n_shot).cmp(&(b.key.test_set, &b.key.language, b.key.n_shot))
    });
    for r in ordered {
        let spec = r.key.spec();
        if !rows.contains(&spec) {
            rows.push(spec);
        }
        let col = (r.key.test_set, r.key.language.clone(), r.dataset.clone(), r.key.n_shot);
        if !columns.contains(&col) {
            columns.push(col.clone());
        }
        values.insert((spec, col), r.macro_f1);
    }
    rows.sort();
    let mut header = vec!["variant".to_string()];
    header.extend(columns.iter().map(|(_, _, code, n)| format!("{code}/{n}")));
    let body = rows
        .iter()
        .map(|spec| {
            let mut line = vec![spec.label()];
            line.extend(columns.iter().map(|col| {
                values
                    .get(&(*spec, col.clone()))
                    .map(|v| format!("{v:.4}"))
                    .unwrap_or_default()
            }));
            line
        })
        .collect();
    (header, body)
}

pub fn write_report_csv(path: &Path, reports: &[&CellReport]) -> Result<()> {
    let (header, rows) = report_table(reports);
    io::atomic_write(path, |w| {
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(&header)?;
        for row in &rows {
            csv.write_record(row)?;
        }
        csv.flush()
    })
}
