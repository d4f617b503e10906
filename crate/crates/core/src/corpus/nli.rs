use std::collections::BTreeMap;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::post::LabeledPost;
use super::sampling::seeded_rng;
use crate::error::{Error, Result};
use crate::label::Label;

/// The main hypothesis used for the NLI formulation of hate speech detection.
pub const HATE_HYPOTHESIS: &str = "This text is hate speech.";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NliLabel {
    Entailment,
    Neutral,
    Contradiction,
}

impl NliLabel {
    /// hate ↦ entailment, not_hate ↦ contradiction.
    pub fn from_hate_label(label: Label) -> Self {
        match label {
            Label::Hate => NliLabel::Entailment,
            Label::NotHate => NliLabel::Contradiction,
        }
    }

    /// Inverse of [`NliLabel::from_hate_label`]; neutral has no binary counterpart.
    pub fn to_hate_label(self) -> Option<Label> {
        match self {
            NliLabel::Entailment => Some(Label::Hate),
            NliLabel::Contradiction => Some(Label::NotHate),
            NliLabel::Neutral => None,
        }
    }
}

impl fmt::Display for NliLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NliLabel::Entailment => "entailment",
            NliLabel::Neutral => "neutral",
            NliLabel::Contradiction => "contradiction",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NliExample {
    pub premise: String,
    pub hypothesis: String,
    pub label: NliLabel,
    pub premise_language: String,
    pub hypothesis_language: String,
}

/// Casts binary posts as NLI pairs: the post is the premise, `hypothesis` the
/// claim that it is hate speech.
pub fn hs_to_nli(
    posts: &[LabeledPost],
    hypothesis: &str,
    hypothesis_language: &str,
) -> Result<Vec<NliExample>> {
    if hypothesis.trim().is_empty() {
        return Err(Error::Precondition("hypothesis must be non-empty".into()));
    }
    Ok(posts
        .iter()
        .map(|post| NliExample {
            premise: post.text.clone(),
            hypothesis: hypothesis.to_string(),
            label: NliLabel::from_hate_label(post.label),
            premise_language: post.language.clone(),
            hypothesis_language: hypothesis_language.to_string(),
        })
        .collect())
}

/// One NLI example with its premise and hypothesis in several languages.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParallelNliExample {
    pub id: String,
    pub label: NliLabel,
    pub premise: BTreeMap<String, String>,
    pub hypothesis: BTreeMap<String, String>,
}

/// Picks premise and hypothesis languages independently and uniformly from
/// `languages` for every example, so a premise in Spanish may be paired with
/// an Arabic hypothesis. One output example per input, labels untouched.
pub fn shuffle_xnli_languages(
    corpus: &[ParallelNliExample],
    languages: &[String],
    seed: u64,
) -> Result<Vec<NliExample>> {
    if languages.is_empty() {
        return Err(Error::Precondition("at least one language is required".into()));
    }
    let mut rng = seeded_rng(seed);
    corpus
        .iter()
        .map(|example| {
            let premise_language = &languages[rng.random_range(0..languages.len())];
            let hypothesis_language = &languages[rng.random_range(0..languages.len())];
            let lookup = |side: &BTreeMap<String, String>, lang: &String| {
                side.get(lang)
                    .cloned()
                    .ok_or_else(|| Error::MissingExampleTranslation {
                        id: example.id.clone(),
                        language: lang.clone(),
                    })
            };
            Ok(NliExample {
                premise: lookup(&example.premise, premise_language)?,
                hypothesis: lookup(&example.hypothesis, hypothesis_language)?,
                label: example.label,
                premise_language: premise_language.clone(),
                hypothesis_language: hypothesis_language.clone(),
            })
        })
        .collect()
}

/// Languages present on both sides of every example, sorted.
pub fn common_languages(corpus: &[ParallelNliExample]) -> Vec<String> {
    let Some(first) = corpus.first() else {
        return Vec::new();
    };
    first
        .premise
        .keys()
        .filter(|lang| {
            corpus
                .iter()
                .all(|ex| ex.premise.contains_key(*lang) && ex.hypothesis.contains_key(*lang))
        })
        .cloned()
        .collect()
}
