use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io;
use crate::label::Label;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Validation => "validation",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "train" => Ok(Split::Train),
            "validation" => Ok(Split::Validation),
            "test" => Ok(Split::Test),
            other => Err(format!("unknown split `{other}`")),
        }
    }
}

/// One social-media post with its binary label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabeledPost {
    pub id: String,
    pub text: String,
    pub label: Label,
    pub language: String,
    pub split: Split,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub total: usize,
    pub hate: usize,
    pub per_split: BTreeMap<Split, usize>,
}

impl DatasetStats {
    pub fn from_posts<'a>(posts: impl IntoIterator<Item = &'a LabeledPost>) -> Self {
        let mut stats = DatasetStats::default();
        for post in posts {
            stats.total += 1;
            if post.label == Label::Hate {
                stats.hate += 1;
            }
            *stats.per_split.entry(post.split).or_default() += 1;
        }
        stats
    }

    /// Fraction of hate posts; 0 for an empty dataset.
    pub fn hate_fraction(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.hate as f64 / self.total as f64
        }
    }

    pub fn split_count(&self, split: Split) -> usize {
        self.per_split.get(&split).copied().unwrap_or(0)
    }
}

/// Per-class counts of a collection of posts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCounts {
    pub hate: usize,
    pub not_hate: usize,
}

impl ClassCounts {
    pub fn of<'a>(posts: impl IntoIterator<Item = &'a LabeledPost>) -> Self {
        let mut counts = ClassCounts::default();
        for post in posts {
            match post.label {
                Label::Hate => counts.hate += 1,
                Label::NotHate => counts.not_hate += 1,
            }
        }
        counts
    }

    pub fn total(&self) -> usize {
        self.hate + self.not_hate
    }
}

/// Parses corpus JSONL, rejecting duplicate ids.
pub fn parse_posts(reader: impl BufRead, source: &str) -> Result<Vec<LabeledPost>> {
    let posts: Vec<LabeledPost> = io::parse_jsonl(reader, source)?;
    check_unique_ids(&posts, source)?;
    Ok(posts)
}

pub fn read_posts(path: &Path) -> Result<Vec<LabeledPost>> {
    let posts: Vec<LabeledPost> = io::read_jsonl(path)?;
    check_unique_ids(&posts, &path.display().to_string())?;
    Ok(posts)
}

fn check_unique_ids(posts: &[LabeledPost], source: &str) -> Result<()> {
    let mut seen = HashSet::with_capacity(posts.len());
    for (idx, post) in posts.iter().enumerate() {
        if !seen.insert(post.id.as_str()) {
            // blank lines are skipped by the parser, so this is the record index
            return Err(Error::Parse {
                path: source.to_string(),
                line: idx + 1,
                message: format!("duplicate id `{}`", post.id),
            });
        }
    }
    Ok(())
}

pub fn filter_split(posts: &[LabeledPost], split: Split) -> Vec<LabeledPost> {
    posts.iter().filter(|p| p.split == split).cloned().collect()
}
