use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::engine::Slot;
use crate::error::{Error, Result};
use crate::io;

/// The three false-positive filters applied on top of a hate prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    FilterByTarget,
    FilterReclaimedSlurs,
    FilterCounterspeech,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [
        Strategy::FilterByTarget,
        Strategy::FilterReclaimedSlurs,
        Strategy::FilterCounterspeech,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::FilterByTarget => "filter_by_target",
            Strategy::FilterReclaimedSlurs => "filter_reclaimed_slurs",
            Strategy::FilterCounterspeech => "filter_counterspeech",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Firing thresholds. Filter-by-target fires when the best target entailment
/// is strictly below `target`; the other two fire on entailment strictly
/// above their threshold. `target = 0` or `slur`/`counter = 1` make a filter
/// unable to fire.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Thresholds {
    #[serde(default = "half")]
    pub target: f64,
    #[serde(default = "half")]
    pub slur: f64,
    #[serde(default = "half")]
    pub counter: f64,
}

fn half() -> f64 {
    0.5
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            target: 0.5,
            slur: 0.5,
            counter: 0.5,
        }
    }
}

impl Thresholds {
    pub fn unreachable() -> Self {
        Thresholds {
            target: 0.0,
            slur: 1.0,
            counter: 1.0,
        }
    }
}

pub fn default_characteristics() -> Vec<String> {
    [
        "religion",
        "race or ethnicity",
        "gender",
        "sexual orientation",
        "disability",
        "national origin",
    ]
    .into_iter()
    .map(String::from)
    .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyConfig {
    pub enabled: BTreeSet<Strategy>,
    pub thresholds: Thresholds,
    pub characteristics: Vec<String>,
    /// language → slur terms; an empty or missing lexicon disables the slur filter.
    pub slur_lexicon: BTreeMap<String, Vec<String>>,
}

impl Default for StrategyConfig {
    fn default() -> Self {
        StrategyConfig {
            enabled: Strategy::ALL.into_iter().collect(),
            thresholds: Thresholds::default(),
            characteristics: default_characteristics(),
            slur_lexicon: BTreeMap::new(),
        }
    }
}

/// On-disk form; lexicon paths are relative to the config file.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct StrategyConfigFile {
    #[serde(default = "all_strategies")]
    enabled: Vec<Strategy>,
    #[serde(default)]
    thresholds: Thresholds,
    #[serde(default = "default_characteristics")]
    characteristics: Vec<String>,
    #[serde(default)]
    lexicons: BTreeMap<String, PathBuf>,
}

fn all_strategies() -> Vec<Strategy> {
    Strategy::ALL.to_vec()
}

impl StrategyConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let file: StrategyConfigFile = io::read_toml(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let mut slur_lexicon = BTreeMap::new();
        for (language, rel) in file.lexicons {
            let lexicon_path = base.join(rel);
            slur_lexicon.insert(language, read_lexicon(&lexicon_path)?);
        }
        let config = StrategyConfig {
            enabled: file.enabled.into_iter().collect(),
            thresholds: file.thresholds,
            characteristics: file.characteristics,
            slur_lexicon,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let Thresholds {
            target,
            slur,
            counter,
        } = self.thresholds;
        for (name, value) in [("target", target), ("slur", slur), ("counter", counter)] {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::Config(format!(
                    "threshold `{name}` must be in [0, 1], got {value}"
                )));
            }
        }
        if self.enabled.contains(&Strategy::FilterByTarget) && self.characteristics.is_empty() {
            return Err(Error::Config(
                "filter_by_target is enabled but no characteristics are configured".into(),
            ));
        }
        if self.characteristics.iter().any(|c| c.trim().is_empty()) {
            return Err(Error::Config("empty characteristic name".into()));
        }
        Ok(())
    }

    pub fn with_unreachable_thresholds(mut self) -> Self {
        self.thresholds = Thresholds::unreachable();
        self
    }

    pub fn is_enabled(&self, strategy: Strategy) -> bool {
        self.enabled.contains(&strategy)
    }

    pub fn lexicon(&self, language: &str) -> &[String] {
        self.slur_lexicon
            .get(language)
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    /// Hypothesis slots an enabled strategy may query.
    pub fn required_slots(&self) -> Vec<Slot> {
        let mut slots = vec![Slot::Main];
        if self.is_enabled(Strategy::FilterByTarget) {
            slots.extend(self.characteristics.iter().cloned().map(Slot::Target));
        }
        if self.is_enabled(Strategy::FilterReclaimedSlurs) {
            slots.extend([Slot::SlurSelfReference, Slot::SlurPositiveSentiment]);
        }
        if self.is_enabled(Strategy::FilterCounterspeech) {
            slots.extend([
                Slot::CounterReferencesStatement,
                Slot::CounterReferencedIsHate,
                Slot::CounterOpposesReferenced,
            ]);
        }
        slots
    }
}

/// One term per line; blank lines and `#` comments are ignored.
pub fn read_lexicon(path: &Path) -> Result<Vec<String>> {
    Ok(io::read_to_string(path)?
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(String::from)
        .collect())
}
