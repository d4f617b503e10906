//! Metrics, bootstrap intervals, the experiment grid and comparison against
//! published reference tables.

mod bootstrap;
mod grid;
mod metrics;
mod reference;
mod registry;
mod variant;

pub use bootstrap::{
    bootstrap_ci, bootstrap_items_ci, percentile_indices, CiMode, Interval, DEFAULT_ALPHA,
    DEFAULT_RESAMPLES,
};
pub use grid::{
    bootstrap_seed, cell_path, fnv1a, read_cell_records, report_table, run_grid, sample_seed,
    write_report_csv, CellKey, CellOutcome, CellRecord, CellReport, DatasetRef, ExperimentCell,
    GridConfig, GridData, GridInputs, GridOutcome, LanguageDatasets, RunOptions, RunResult, TestSet,
    DEFAULT_N_SHOTS, DEFAULT_RUNS,
};
pub use metrics::{macro_f1, MacroF1};
pub use reference::{
    compare_to_reference, format_diff, points_from_reports, read_reference, write_comparison_csv,
    Comparison, DiffTable, ReferenceRow, ResultPoint,
};
pub use registry::{BackendEntry, BackendKind, BackendLoader, BackendRegistry, MockLoader};
pub use variant::{BaseModel, EnglishHs, EvalMode, ModelVariant, NliPhase, VariantSpec};
