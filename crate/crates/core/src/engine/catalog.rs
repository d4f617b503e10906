use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::HATE_HYPOTHESIS;
use crate::error::{Error, Result};
use crate::io;

/// Identifies one hypothesis: the main claim or an auxiliary probe of a strategy.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Slot {
    Main,
    /// "This text is about <characteristic>."
    Target(String),
    SlurSelfReference,
    SlurPositiveSentiment,
    CounterReferencesStatement,
    CounterReferencedIsHate,
    CounterOpposesReferenced,
}

impl Slot {
    pub fn target(characteristic: impl Into<String>) -> Slot {
        Slot::Target(characteristic.into())
    }
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Slot::Main => f.write_str("main"),
            Slot::Target(c) => write!(f, "target:{c}"),
            Slot::SlurSelfReference => f.write_str("slur:self_reference"),
            Slot::SlurPositiveSentiment => f.write_str("slur:positive_sentiment"),
            Slot::CounterReferencesStatement => f.write_str("counter:references_statement"),
            Slot::CounterReferencedIsHate => f.write_str("counter:referenced_is_hate"),
            Slot::CounterOpposesReferenced => f.write_str("counter:opposes_referenced"),
        }
    }
}

impl FromStr for Slot {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "main" => Slot::Main,
            "slur:self_reference" => Slot::SlurSelfReference,
            "slur:positive_sentiment" => Slot::SlurPositiveSentiment,
            "counter:references_statement" => Slot::CounterReferencesStatement,
            "counter:referenced_is_hate" => Slot::CounterReferencedIsHate,
            "counter:opposes_referenced" => Slot::CounterOpposesReferenced,
            other => match other.strip_prefix("target:") {
                Some(c) if !c.trim().is_empty() => Slot::Target(c.to_string()),
                _ => return Err(Error::Config(format!("unknown hypothesis slot `{other}`"))),
            },
        })
    }
}

impl Serialize for Slot {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Slot {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Monolingual models get hypotheses translated into the input language;
/// multilingual models always get the default-language (English) text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Monolingual,
    Multilingual,
}

/// A resolved hypothesis as handed to a backend.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hypothesis {
    pub slot: Slot,
    pub language: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HypothesisCatalog {
    pub default_language: String,
    /// slot → language → text
    pub hypotheses: BTreeMap<Slot, BTreeMap<String, String>>,
}

impl HypothesisCatalog {
    pub fn load(path: &Path) -> Result<Self> {
        let catalog: HypothesisCatalog = io::read_toml(path)?;
        catalog.validate()?;
        Ok(catalog)
    }

    pub fn validate(&self) -> Result<()> {
        let main = self
            .hypotheses
            .get(&Slot::Main)
            .ok_or_else(|| Error::Config("catalog has no `main` hypothesis".into()))?;
        if !main.contains_key(&self.default_language) {
            return Err(Error::Config(format!(
                "catalog `main` hypothesis lacks the default language `{}`",
                self.default_language
            )));
        }
        for (slot, texts) in &self.hypotheses {
            if texts.values().any(|t| t.trim().is_empty()) {
                return Err(Error::Config(format!("empty hypothesis text for slot `{slot}`")));
            }
        }
        Ok(())
    }

    /// English catalog with the main hypothesis and every auxiliary probe.
    pub fn english_default(characteristics: &[String]) -> Self {
        let mut hypotheses = BTreeMap::new();
        let en = |text: String| BTreeMap::from([("en".to_string(), text)]);
        hypotheses.insert(Slot::Main, en(HATE_HYPOTHESIS.to_string()));
        for c in characteristics {
            hypotheses.insert(Slot::target(c.clone()), en(format!("This text is about {c}.")));
        }
        for (slot, text) in [
            (Slot::SlurSelfReference, "The author of this text talks about themselves."),
            (Slot::SlurPositiveSentiment, "This text has a positive sentiment."),
            (Slot::CounterReferencesStatement, "This text references something someone else said."),
            (Slot::CounterReferencedIsHate, "The referenced statement is hate speech."),
            (Slot::CounterOpposesReferenced, "This text opposes the referenced statement."),
        ] {
            hypotheses.insert(slot, en(text.to_string()));
        }
        HypothesisCatalog {
            default_language: "en".into(),
            hypotheses,
        }
    }

    pub fn insert(&mut self, slot: Slot, language: &str, text: &str) {
        self.hypotheses
            .entry(slot)
            .or_default()
            .insert(language.to_string(), text.to_string());
    }

    /// Picks the hypothesis text for `slot`. There is no live translation:
    /// a monolingual request without a stored translation is an error.
    pub fn resolve(&self, slot: &Slot, language: &str, kind: ModelKind) -> Result<Hypothesis> {
        let texts = self
            .hypotheses
            .get(slot)
            .ok_or_else(|| Error::MissingSlot(slot.to_string()))?;
        let wanted = match kind {
            ModelKind::Multilingual => self.default_language.as_str(),
            ModelKind::Monolingual => language,
        };
        let text = texts.get(wanted).ok_or_else(|| Error::MissingTranslation {
            slot: slot.to_string(),
            language: wanted.to_string(),
        })?;
        Ok(Hypothesis {
            slot: slot.clone(),
            language: wanted.to_string(),
            text: text.clone(),
        })
    }
}

/// Free-function form of [`HypothesisCatalog::resolve`] returning only the text.
pub fn resolve_hypothesis(
    catalog: &HypothesisCatalog,
    slot: &Slot,
    language: &str,
    kind: ModelKind,
) -> Result<String> {
    catalog.resolve(slot, language, kind).map(|h| h.text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn catalog() -> HypothesisCatalog {
        let mut c = HypothesisCatalog::english_default(&["religion".into()]);
        c.insert(Slot::Main, "es", "Este texto es discurso de odio.");
        c
    }

    #[test]
    fn multilingual_keeps_english() {
        assert_eq!(
            resolve_hypothesis(&catalog(), &Slot::Main, "es", ModelKind::Multilingual).unwrap(),
            "This text is hate speech."
        );
    }

    #[test]
    fn monolingual_uses_translation() {
        assert_eq!(
            resolve_hypothesis(&catalog(), &Slot::Main, "es", ModelKind::Monolingual).unwrap(),
            "Este texto es discurso de odio."
        );
    }

    #[test]
    fn monolingual_missing_translation() {
        let err = resolve_hypothesis(&catalog(), &Slot::Main, "hi", ModelKind::Monolingual).unwrap_err();
        assert!(matches!(err, Error::MissingTranslation { ref language, .. } if language == "hi"));
        let err = resolve_hypothesis(&catalog(), &Slot::target("gender"), "en", ModelKind::Multilingual)
            .unwrap_err();
        assert!(matches!(err, Error::MissingSlot(_)));
    }

    #[test]
    fn slot_names_round_trip() {
        for slot in catalog().hypotheses.keys() {
            assert_eq!(&slot.to_string().parse::<Slot>().unwrap(), slot);
        }
        assert!("target:".parse::<Slot>().is_err());
        assert!("bogus".parse::<Slot>().is_err());
    }

    #[test]
    fn toml_form() {
        let c: HypothesisCatalog = toml::from_str(
            r#"
            default_language = "en"
            [hypotheses.main]
            en = "This text is hate speech."
            [hypotheses."target:sexual orientation"]
            en = "This text is about sexual orientation."
            "#,
        )
        .unwrap();
        c.validate().unwrap();
        assert!(c.hypotheses.contains_key(&Slot::target("sexual orientation")));

        let missing_default: HypothesisCatalog = toml::from_str(
            "default_language = \"en\"\n[hypotheses.main]\nes = \"x\"\n",
        )
        .unwrap();
        assert!(missing_default.validate().is_err());
    }
}
