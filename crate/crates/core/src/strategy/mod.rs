//! Hypothesis-engineering filters layered on the main hate prediction.
//!
//! A positive main prediction is re-examined with auxiliary hypotheses
//! scored by a (usually NLI-only) auxiliary backend. Every enabled filter is
//! evaluated so traces are complete; if any fires the final label becomes
//! `not_hate`. Filters can only remove positives, never add them.

mod config;
mod filters;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use config::{default_characteristics, read_lexicon, Strategy, StrategyConfig, Thresholds};
pub use filters::{
    filter_by_target, filter_counterspeech, filter_reclaimed_slurs, find_lexicon_term, AuxContext,
    FilterOutcome, FilterStatus,
};

use crate::engine::{
    classify_normalized, DecisionPolicy, HypothesisCatalog, InferenceBackend, MainPrediction,
    ModelKind, NliScores, Slot,
};
use crate::error::Result;
use crate::label::Label;
use crate::normalize::normalize;

/// Full record of how one input was classified.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationTrace {
    pub input_id: String,
    pub main_scores: NliScores,
    pub main_label: Label,
    #[serde(default)]
    pub aux_scores: BTreeMap<Slot, NliScores>,
    #[serde(default)]
    pub filters: BTreeMap<Strategy, FilterStatus>,
    #[serde(default)]
    pub fired_filters: Vec<Strategy>,
    pub final_label: Label,
    /// Present only for strategies-mode traces.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thresholds: Option<Thresholds>,
}

impl ClassificationTrace {
    /// Trace of a standard (single hypothesis) prediction.
    pub fn standard(input_id: impl Into<String>, main: MainPrediction) -> Self {
        ClassificationTrace {
            input_id: input_id.into(),
            main_scores: main.scores,
            main_label: main.label,
            aux_scores: BTreeMap::new(),
            filters: BTreeMap::new(),
            fired_filters: Vec::new(),
            final_label: main.label,
            thresholds: None,
        }
    }
}

/// Main backend plus everything the filters need.
#[derive(Clone, Copy)]
pub struct StrategyClassifier<'a> {
    pub main: &'a dyn InferenceBackend,
    pub aux: &'a dyn InferenceBackend,
    pub catalog: &'a HypothesisCatalog,
    pub policy: &'a DecisionPolicy,
    pub config: &'a StrategyConfig,
    pub kind: ModelKind,
}

impl StrategyClassifier<'_> {
    pub fn classify(&self, input_id: &str, text: &str, language: &str) -> Result<ClassificationTrace> {
        let premise = normalize(text);
        let main = classify_normalized(self.main, self.catalog, self.policy, &premise, language, self.kind)?;
        let mut trace = ClassificationTrace::standard(input_id, main);
        trace.thresholds = Some(self.config.thresholds);

        let enabled = Strategy::ALL.into_iter().filter(|s| self.config.is_enabled(*s));
        if main.label == Label::NotHate {
            trace.filters = enabled.map(|s| (s, FilterStatus::Skipped)).collect();
            return Ok(trace);
        }

        let aux = AuxContext {
            backend: self.aux,
            catalog: self.catalog,
            language,
            kind: self.kind,
        };
        for strategy in enabled {
            let outcome = match strategy {
                Strategy::FilterByTarget => filter_by_target(&premise, aux, self.config)?,
                Strategy::FilterReclaimedSlurs => filter_reclaimed_slurs(&premise, aux, self.config)?,
                Strategy::FilterCounterspeech => filter_counterspeech(&premise, aux, self.config)?,
            };
            if outcome.fired() {
                trace.fired_filters.push(strategy);
            }
            trace.filters.insert(strategy, outcome.status);
            trace.aux_scores.extend(outcome.scores);
        }
        if !trace.fired_filters.is_empty() {
            trace.final_label = Label::NotHate;
        }
        Ok(trace)
    }
}

/// Classifies one input with the main hypothesis and, for positives, the
/// enabled filters.
#[allow(clippy::too_many_arguments)]
pub fn classify_with_strategies(
    input_id: &str,
    text: &str,
    language: &str,
    main_backend: &dyn InferenceBackend,
    aux_backend: &dyn InferenceBackend,
    catalog: &HypothesisCatalog,
    policy: &DecisionPolicy,
    config: &StrategyConfig,
    kind: ModelKind,
) -> Result<ClassificationTrace> {
    StrategyClassifier {
        main: main_backend,
        aux: aux_backend,
        catalog,
        policy,
        config,
        kind,
    }
    .classify(input_id, text, language)
}
