use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Binary hate speech label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Hate,
    NotHate,
}

impl Label {
    pub const ALL: [Label; 2] = [Label::Hate, Label::NotHate];

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Hate => "hate",
            Label::NotHate => "not_hate",
        }
    }

    pub fn flipped(self) -> Label {
        match self {
            Label::Hate => Label::NotHate,
            Label::NotHate => Label::Hate,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "hate" => Ok(Label::Hate),
            "not_hate" => Ok(Label::NotHate),
            other => Err(format!("unknown label `{other}` (expected hate|not_hate)")),
        }
    }
}
