use serde::{Deserialize, Serialize};

use super::scores::NliScores;
use crate::error::{Error, Result};
use crate::label::Label;

/// How a three-way NLI distribution becomes a binary hate decision.
/// Ties always resolve to `not_hate`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
pub enum DecisionPolicy {
    /// hate iff entailment strictly exceeds both neutral and contradiction.
    #[default]
    Argmax,
    /// hate iff e / (e + c) > threshold.
    RenormalizedThreshold { threshold: f64 },
}

impl DecisionPolicy {
    pub fn validate(&self) -> Result<()> {
        match *self {
            DecisionPolicy::Argmax => Ok(()),
            DecisionPolicy::RenormalizedThreshold { threshold } if threshold > 0.0 && threshold < 1.0 => Ok(()),
            DecisionPolicy::RenormalizedThreshold { threshold } => Err(Error::Config(format!(
                "decision threshold must be in (0, 1), got {threshold}"
            ))),
        }
    }

    pub fn decide(&self, scores: &NliScores) -> Label {
        let (e, n, c) = (scores.entailment(), scores.neutral(), scores.contradiction());
        let hate = match *self {
            DecisionPolicy::Argmax => e > n && e > c,
            DecisionPolicy::RenormalizedThreshold { threshold } => {
                let mass = e + c;
                mass > 0.0 && e / mass > threshold
            }
        };
        if hate {
            Label::Hate
        } else {
            Label::NotHate
        }
    }
}

pub fn decide(scores: &NliScores, policy: &DecisionPolicy) -> Label {
    policy.decide(scores)
}
