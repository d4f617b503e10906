use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::engine::ModelKind;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BaseModel {
    /// Monolingual target-language model.
    M,
    /// Multilingual model.
    X,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NliPhase {
    /// English MNLI.
    Nli,
    /// Cross-lingual XNLI with shuffled premise/hypothesis languages.
    Xnli,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EnglishHs {
    Den,
    Fen,
    Ken,
}

impl EnglishHs {
    pub fn code(self) -> &'static str {
        match self {
            EnglishHs::Den => "DEN",
            EnglishHs::Fen => "FEN",
            EnglishHs::Ken => "KEN",
        }
    }
}

/// A training recipe such as `X`, `M+NLI` or `X+XNLI+FEN`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ModelVariant {
    pub base: BaseModel,
    pub nli: Option<NliPhase>,
    pub en_hs: Option<EnglishHs>,
}

impl ModelVariant {
    pub fn kind(&self) -> ModelKind {
        match self.base {
            BaseModel::M => ModelKind::Monolingual,
            BaseModel::X => ModelKind::Multilingual,
        }
    }

    pub fn is_nli(&self) -> bool {
        self.nli.is_some()
    }

    /// The NLI-only model that scores auxiliary hypotheses for this variant.
    pub fn auxiliary_variant(&self) -> ModelVariant {
        ModelVariant {
            en_hs: None,
            ..*self
        }
    }

    pub fn tag(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for ModelVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self.base {
            BaseModel::M => "M",
            BaseModel::X => "X",
        })?;
        match self.nli {
            Some(NliPhase::Nli) => f.write_str("+NLI")?,
            Some(NliPhase::Xnli) => f.write_str("+XNLI")?,
            None => {}
        }
        if let Some(hs) = self.en_hs {
            write!(f, "+{}", hs.code())?;
        }
        Ok(())
    }
}

impl FromStr for ModelVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |why: &str| Error::Config(format!("invalid model variant `{s}`: {why}"));
        let mut parts = s.split('+').map(str::trim);
        let base = match parts.next() {
            Some("M") => BaseModel::M,
            Some("X") => BaseModel::X,
            _ => return Err(bad("must start with M or X")),
        };
        let mut variant = ModelVariant {
            base,
            nli: None,
            en_hs: None,
        };
        for part in parts {
            match part {
                "NLI" | "XNLI" if variant.nli.is_some() || variant.en_hs.is_some() => {
                    return Err(bad("NLI phase must come once, before English HS"))
                }
                "NLI" => variant.nli = Some(NliPhase::Nli),
                "XNLI" => variant.nli = Some(NliPhase::Xnli),
                "DEN" | "FEN" | "KEN" if variant.en_hs.is_some() => {
                    return Err(bad("at most one English HS phase"))
                }
                "DEN" => variant.en_hs = Some(EnglishHs::Den),
                "FEN" => variant.en_hs = Some(EnglishHs::Fen),
                "KEN" => variant.en_hs = Some(EnglishHs::Ken),
                other => return Err(bad(&format!("unknown component `{other}`"))),
            }
        }
        if base == BaseModel::M && variant.nli == Some(NliPhase::Xnli) {
            return Err(bad("XNLI needs the multilingual base"));
        }
        Ok(variant)
    }
}

impl Serialize for ModelVariant {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ModelVariant {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalMode {
    #[default]
    Standard,
    Strategies,
}

impl EvalMode {
    pub fn as_str(self) -> &'static str {
        match self {
            EvalMode::Standard => "standard",
            EvalMode::Strategies => "strategies",
        }
    }
}

/// A variant evaluated in a given mode: one row of the report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VariantSpec {
    #[serde(rename = "tag")]
    pub variant: ModelVariant,
    #[serde(default)]
    pub mode: EvalMode,
}

impl VariantSpec {
    pub fn validate(&self) -> Result<()> {
        if self.mode == EvalMode::Strategies && !self.variant.is_nli() {
            return Err(Error::Config(format!(
                "variant {} cannot run in strategies mode: it has no NLI phase",
                self.variant
            )));
        }
        Ok(())
    }

    /// Row label: the tag, suffixed with the mode when it is not standard.
    pub fn label(&self) -> String {
        match self.mode {
            EvalMode::Standard => self.variant.tag(),
            EvalMode::Strategies => format!("{} [strategies]", self.variant),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_display() {
        for tag in ["M", "X", "M+NLI", "X+NLI", "X+XNLI", "X+DEN", "X+XNLI+FEN", "M+NLI+KEN"] {
            let v: ModelVariant = tag.parse().unwrap();
            assert_eq!(v.to_string(), tag);
        }
        assert_eq!("X + DEN".parse::<ModelVariant>().unwrap().tag(), "X+DEN");
        for bad in ["", "Y", "M+XNLI", "X+FEN+NLI", "X+NLI+XNLI", "X+DEN+KEN", "X+FOO"] {
            assert!(bad.parse::<ModelVariant>().is_err(), "{bad}");
        }
    }

    #[test]
    fn kinds_and_aux() {
        let v: ModelVariant = "X+XNLI+DEN".parse().unwrap();
        assert_eq!(v.kind(), ModelKind::Multilingual);
        assert_eq!(v.auxiliary_variant().tag(), "X+XNLI");
        assert_eq!("M+NLI".parse::<ModelVariant>().unwrap().kind(), ModelKind::Monolingual);
    }

    #[test]
    fn strategies_need_nli() {
        let spec = |t: &str| VariantSpec {
            variant: t.parse().unwrap(),
            mode: EvalMode::Strategies,
        };
        assert!(spec("X+DEN").validate().is_err());
        spec("X+NLI").validate().unwrap();
        assert_eq!(spec("X+NLI").label(), "X+NLI [strategies]");
    }
}
