use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SUM_TOLERANCE: f64 = 1e-6;

/// Three-way NLI probability distribution for one premise/hypothesis pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawScores")]
pub struct NliScores {
    entailment: f64,
    neutral: f64,
    contradiction: f64,
}

#[derive(Deserialize)]
struct RawScores {
    entailment: f64,
    neutral: f64,
    contradiction: f64,
}

impl TryFrom<RawScores> for NliScores {
    type Error = Error;

    fn try_from(raw: RawScores) -> Result<Self> {
        NliScores::new(raw.entailment, raw.neutral, raw.contradiction)
    }
}

impl NliScores {
    /// Each probability must lie in [0, 1] and the three must sum to 1 within 1e-6.
    pub fn new(entailment: f64, neutral: f64, contradiction: f64) -> Result<Self> {
        let parts = [entailment, neutral, contradiction];
        if parts.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::InvalidScores(format!(
                "probabilities out of [0, 1]: {parts:?}"
            )));
        }
        let sum: f64 = parts.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::InvalidScores(format!(
                "probabilities sum to {sum}, not 1: {parts:?}"
            )));
        }
        Ok(NliScores {
            entailment,
            neutral,
            contradiction,
        })
    }

    pub fn from_array(scores: [f64; 3]) -> Result<Self> {
        NliScores::new(scores[0], scores[1], scores[2])
    }

    /// Softmax over raw (entailment, neutral, contradiction) logits.
    pub fn from_logits(logits: [f64; 3]) -> Result<Self> {
        if logits.iter().any(|l| !l.is_finite()) {
            return Err(Error::InvalidScores(format!("non-finite logits {logits:?}")));
        }
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exp = logits.map(|l| (l - max).exp());
        let total: f64 = exp.iter().sum();
        NliScores::from_array(exp.map(|e| e / total))
    }

    pub fn entailment(&self) -> f64 {
        self.entailment
    }

    pub fn neutral(&self) -> f64 {
        self.neutral
    }

    pub fn contradiction(&self) -> f64 {
        self.contradiction
    }

    pub fn to_array(&self) -> [f64; 3] {
        [self.entailment, self.neutral, self.contradiction]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_distributions() {
        assert!(NliScores::new(0.5, 0.5, 0.5).is_err());
        assert!(NliScores::new(1.2, -0.1, -0.1).is_err());
        assert!(NliScores::new(f64::NAN, 0.5, 0.5).is_err());
        assert!(NliScores::new(0.8, 0.1, 0.1).is_ok());
    }

    #[test]
    fn softmax_sums_to_one() {
        let s = NliScores::from_logits([2.0, -1.0, 0.5]).unwrap();
        assert!((s.to_array().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(s.entailment() > s.contradiction());
    }

    #[test]
    fn serde_validates() {
        let ok: NliScores = serde_json::from_str(r#"{"entailment":0.2,"neutral":0.3,"contradiction":0.5}"#).unwrap();
        assert_eq!(ok.to_array(), [0.2, 0.3, 0.5]);
        assert!(serde_json::from_str::<NliScores>(r#"{"entailment":0.9,"neutral":0.3,"contradiction":0.5}"#).is_err());
    }
}
