use serde::{Deserialize, Serialize};

use super::config::StrategyConfig;
use crate::engine::{score_pair, HypothesisCatalog, InferenceBackend, ModelKind, NliScores, Slot};
use crate::error::Result;

/// Where and how auxiliary hypotheses are scored for one input.
#[derive(Clone, Copy)]
pub struct AuxContext<'a> {
    pub backend: &'a dyn InferenceBackend,
    pub catalog: &'a HypothesisCatalog,
    pub language: &'a str,
    pub kind: ModelKind,
}

impl AuxContext<'_> {
    fn score(&self, premise: &str, slot: Slot) -> Result<(Slot, NliScores)> {
        let hypothesis = self.catalog.resolve(&slot, self.language, self.kind)?;
        let scores = score_pair(self.backend, premise, &hypothesis)?;
        Ok((slot, scores))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterStatus {
    /// Not evaluated because the main prediction was already not_hate.
    Skipped,
    /// Not evaluated because its trigger did not apply (no lexicon slur).
    Gated,
    NotFired,
    Fired,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterOutcome {
    pub status: FilterStatus,
    pub scores: Vec<(Slot, NliScores)>,
}

impl FilterOutcome {
    pub fn fired(&self) -> bool {
        self.status == FilterStatus::Fired
    }

    fn decided(fired: bool, scores: Vec<(Slot, NliScores)>) -> Self {
        FilterOutcome {
            status: if fired {
                FilterStatus::Fired
            } else {
                FilterStatus::NotFired
            },
            scores,
        }
    }
}

/// Fires when no protected characteristic is plausibly targeted:
/// `max_c P(entail | "This text is about <c>.") < tau_target`.
pub fn filter_by_target(
    premise: &str,
    aux: AuxContext<'_>,
    config: &StrategyConfig,
) -> Result<FilterOutcome> {
    let scores = config
        .characteristics
        .iter()
        .map(|c| aux.score(premise, Slot::target(c.clone())))
        .collect::<Result<Vec<_>>>()?;
    let best = scores
        .iter()
        .map(|(_, s)| s.entailment())
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(FilterOutcome::decided(
        !scores.is_empty() && best < config.thresholds.target,
        scores,
    ))
}

/// Fires on a lexicon slur used self-referentially or with positive sentiment.
/// Without a lexicon hit nothing is scored and the filter is gated.
pub fn filter_reclaimed_slurs(
    premise: &str,
    aux: AuxContext<'_>,
    config: &StrategyConfig,
) -> Result<FilterOutcome> {
    if find_lexicon_term(premise, config.lexicon(aux.language)).is_none() {
        return Ok(FilterOutcome {
            status: FilterStatus::Gated,
            scores: Vec::new(),
        });
    }
    let scores = vec![
        aux.score(premise, Slot::SlurSelfReference)?,
        aux.score(premise, Slot::SlurPositiveSentiment)?,
    ];
    let tau = config.thresholds.slur;
    let fired = scores.iter().any(|(_, s)| s.entailment() > tau);
    Ok(FilterOutcome::decided(fired, scores))
}

/// Fires when the text references another statement, that statement is hate
/// speech, and the text opposes it.
pub fn filter_counterspeech(
    premise: &str,
    aux: AuxContext<'_>,
    config: &StrategyConfig,
) -> Result<FilterOutcome> {
    let scores = vec![
        aux.score(premise, Slot::CounterReferencesStatement)?,
        aux.score(premise, Slot::CounterReferencedIsHate)?,
        aux.score(premise, Slot::CounterOpposesReferenced)?,
    ];
    let tau = config.thresholds.counter;
    let fired = scores.iter().all(|(_, s)| s.entailment() > tau);
    Ok(FilterOutcome::decided(fired, scores))
}

/// Case-insensitive search for a lexicon term bounded by non-word characters.
pub fn find_lexicon_term<'a>(text: &str, lexicon: &'a [String]) -> Option<&'a str> {
    let haystack = text.to_lowercase();
    lexicon
        .iter()
        .find(|term| {
            let needle = term.trim().to_lowercase();
            !needle.is_empty() && contains_bounded(&haystack, &needle)
        })
        .map(String::as_str)
}

fn contains_bounded(haystack: &str, needle: &str) -> bool {
    let is_word = |c: char| c.is_alphanumeric() || c == '_';
    haystack.match_indices(needle).any(|(start, m)| {
        let before = haystack[..start].chars().next_back();
        let after = haystack[start + m.len()..].chars().next();
        !before.is_some_and(is_word) && !after.is_some_and(is_word)
    })
}
