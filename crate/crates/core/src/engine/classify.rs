use serde::{Deserialize, Serialize};

use super::backend::{score_pair, InferenceBackend};
use super::catalog::{HypothesisCatalog, ModelKind, Slot};
use super::policy::DecisionPolicy;
use super::scores::NliScores;
use crate::error::Result;
use crate::label::Label;
use crate::normalize::normalize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MainPrediction {
    pub label: Label,
    pub scores: NliScores,
}

/// Normalizes `text`, pairs it with the main hypothesis and decides.
pub fn classify_main(
    backend: &dyn InferenceBackend,
    catalog: &HypothesisCatalog,
    policy: &DecisionPolicy,
    text: &str,
    language: &str,
    kind: ModelKind,
) -> Result<MainPrediction> {
    let premise = normalize(text);
    classify_normalized(backend, catalog, policy, &premise, language, kind)
}

/// [`classify_main`] for a premise that has already been normalized.
pub(crate) fn classify_normalized(
    backend: &dyn InferenceBackend,
    catalog: &HypothesisCatalog,
    policy: &DecisionPolicy,
    premise: &str,
    language: &str,
    kind: ModelKind,
) -> Result<MainPrediction> {
    let hypothesis = catalog.resolve(&Slot::Main, language, kind)?;
    let scores = score_pair(backend, premise, &hypothesis)?;
    Ok(MainPrediction {
        label: policy.decide(&scores),
        scores,
    })
}
