use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::catalog::Hypothesis;
use super::scores::NliScores;
use crate::error::{Error, Result};
use crate::io;

/// Anything that scores a premise/hypothesis pair with an NLI distribution.
///
/// Implementations own tokenization and truncation. Calls with the same
/// pair must return the same scores for a loaded model, and `score` may be
/// called from several threads at once.
pub trait InferenceBackend: Send + Sync {
    /// Model variant identifier, used in error messages and traces.
    fn identity(&self) -> &str;

    fn score(&self, premise: &str, hypothesis: &Hypothesis) -> Result<NliScores>;
}

/// Scores one pair and re-checks the distribution contract, tagging any
/// failure with the backend identity.
pub fn score_pair(
    backend: &dyn InferenceBackend,
    premise: &str,
    hypothesis: &Hypothesis,
) -> Result<NliScores> {
    let scores = backend
        .score(premise, hypothesis)
        .map_err(|e| match e {
            err @ Error::Backend { .. } => err,
            other => Error::backend(backend.identity(), other),
        })?;
    NliScores::from_array(scores.to_array()).map_err(|e| Error::backend(backend.identity(), e))
}

pub const WILDCARD: &str = "*";

/// One row of a mock table: `{"match": ..., "slot": ..., "scores": [e, n, c]}`.
///
/// `match` is a substring of the (normalized) premise and `slot` a hypothesis
/// slot name; either may be `*`. A `*`/`*` row is the default for unmatched pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MockEntry {
    #[serde(rename = "match")]
    pub pattern: String,
    pub slot: String,
    pub scores: [f64; 3],
}

impl MockEntry {
    pub fn new(pattern: impl Into<String>, slot: impl Into<String>, scores: NliScores) -> Self {
        MockEntry {
            pattern: pattern.into(),
            slot: slot.into(),
            scores: scores.to_array(),
        }
    }

    fn matches(&self, premise: &str, slot: &str) -> Option<u8> {
        let pattern_hit = self.pattern == WILDCARD || premise.contains(&self.pattern);
        let slot_hit = self.slot == WILDCARD || self.slot == slot;
        (pattern_hit && slot_hit)
            .then(|| 2 * u8::from(self.pattern != WILDCARD) + u8::from(self.slot != WILDCARD))
    }
}

/// Table-driven backend for tests and desk-scale runs.
///
/// The most specific matching row wins (premise match outranks slot match,
/// which outranks wildcards); ties go to the earlier row.
#[derive(Debug, Clone)]
pub struct MockBackend {
    identity: String,
    entries: Vec<(MockEntry, NliScores)>,
}

impl MockBackend {
    pub fn new(identity: impl Into<String>, entries: Vec<MockEntry>) -> Result<Self> {
        let identity = identity.into();
        let entries = entries
            .into_iter()
            .enumerate()
            .map(|(i, entry)| {
                let scores = NliScores::from_array(entry.scores).map_err(|e| {
                    Error::backend(identity.clone(), format!("mock row {}: {e}", i + 1))
                })?;
                Ok((entry, scores))
            })
            .collect::<Result<_>>()?;
        Ok(MockBackend { identity, entries })
    }

    pub fn from_reader(identity: impl Into<String>, reader: impl BufRead) -> Result<Self> {
        let identity = identity.into();
        let entries: Vec<MockEntry> = io::parse_jsonl(reader, &identity)?;
        MockBackend::new(identity, entries)
    }

    /// Loads a mock table; the identity is the file path.
    pub fn from_path(path: &Path) -> Result<Self> {
        let entries: Vec<MockEntry> = io::read_jsonl(path)?;
        MockBackend::new(path.display().to_string(), entries)
    }

    pub fn entries(&self) -> impl Iterator<Item = &MockEntry> {
        self.entries.iter().map(|(e, _)| e)
    }
}

impl InferenceBackend for MockBackend {
    fn identity(&self) -> &str {
        &self.identity
    }

    fn score(&self, premise: &str, hypothesis: &Hypothesis) -> Result<NliScores> {
        let slot = hypothesis.slot.to_string();
        let mut best: Option<(u8, &NliScores)> = None;
        for (entry, scores) in &self.entries {
            if let Some(rank) = entry.matches(premise, &slot) {
                if best.is_none_or(|(b, _)| rank > b) {
                    best = Some((rank, scores));
                }
            }
        }
        best.map(|(_, s)| *s).ok_or_else(|| {
            Error::backend(
                &self.identity,
                format!("no mock row for slot `{slot}` and premise {premise:?}"),
            )
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::catalog::Slot;

    fn hyp(slot: Slot) -> Hypothesis {
        Hypothesis {
            slot,
            language: "en".into(),
            text: "H".into(),
        }
    }

    fn s(e: f64, n: f64, c: f64) -> NliScores {
        NliScores::new(e, n, c).unwrap()
    }

    #[test]
    fn passthrough_and_determinism() {
        let mock = MockBackend::new("m", vec![MockEntry::new("p", "main", s(0.8, 0.1, 0.1))]).unwrap();
        let a = score_pair(&mock, "p", &hyp(Slot::Main)).unwrap();
        assert_eq!(a.to_array(), [0.8, 0.1, 0.1]);
        assert_eq!(a, score_pair(&mock, "p", &hyp(Slot::Main)).unwrap());
    }

    #[test]
    fn specificity_and_default() {
        let mock = MockBackend::new(
            "m",
            vec![
                MockEntry::new("*", "*", s(0.1, 0.1, 0.8)),
                MockEntry::new("*", "main", s(0.2, 0.2, 0.6)),
                MockEntry::new("<a>", "*", s(0.3, 0.3, 0.4)),
                MockEntry::new("<a>", "main", s(0.9, 0.05, 0.05)),
            ],
        )
        .unwrap();
        let score = |p: &str, slot: Slot| mock.score(p, &hyp(slot)).unwrap().entailment();
        assert_eq!(score("x <a> y", Slot::Main), 0.9);
        assert_eq!(score("x <a> y", Slot::SlurPositiveSentiment), 0.3);
        assert_eq!(score("zzz", Slot::Main), 0.2);
        assert_eq!(score("zzz", Slot::SlurSelfReference), 0.1);
    }

    #[test]
    fn unmatched_without_default_fails_with_identity() {
        let mock = MockBackend::new("table.jsonl", vec![MockEntry::new("a", "main", s(1.0, 0.0, 0.0))]).unwrap();
        let err = score_pair(&mock, "b", &hyp(Slot::Main)).unwrap_err();
        assert!(err.to_string().contains("table.jsonl"), "{err}");
    }

    #[test]
    fn rejects_invalid_rows() {
        let rows = "{\"match\":\"a\",\"slot\":\"main\",\"scores\":[0.9,0.9,0.9]}\n";
        assert!(MockBackend::from_reader("m", rows.as_bytes()).is_err());
    }
}
