use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::label::Label;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MacroF1 {
    pub macro_f1: f64,
    pub per_class: BTreeMap<Label, f64>,
    /// Classes that occur in neither gold nor predictions; they score 0.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub absent_classes: Vec<Label>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct Confusion {
    tp: usize,
    fp: usize,
    fn_: usize,
}

impl Confusion {
    fn f1(self) -> f64 {
        let denom = 2 * self.tp + self.fp + self.fn_;
        if denom == 0 {
            0.0
        } else {
            (2 * self.tp) as f64 / denom as f64
        }
    }
}

/// Unweighted mean of the per-class F1 over `hate` and `not_hate`.
pub fn macro_f1(predictions: &[Label], gold: &[Label]) -> Result<MacroF1> {
    if predictions.len() != gold.len() {
        return Err(Error::LengthMismatch {
            predictions: predictions.len(),
            gold: gold.len(),
        });
    }
    if gold.is_empty() {
        return Err(Error::Empty("macro_f1 needs at least one prediction".into()));
    }
    let mut per_class = BTreeMap::new();
    let mut absent_classes = Vec::new();
    for class in Label::ALL {
        let mut c = Confusion::default();
        for (&p, &g) in predictions.iter().zip(gold) {
            match (p == class, g == class) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, true) => c.fn_ += 1,
                (false, false) => {}
            }
        }
        if c == Confusion::default() {
            absent_classes.push(class);
        }
        per_class.insert(class, c.f1());
    }
    let macro_f1 = per_class.values().sum::<f64>() / per_class.len() as f64;
    Ok(MacroF1 {
        macro_f1,
        per_class,
        absent_classes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use Label::{Hate as H, NotHate as N};

    #[test]
    fn golden() {
        assert_eq!(macro_f1(&[H, N, H, N], &[H, N, H, N]).unwrap().macro_f1, 1.0);
        assert_eq!(macro_f1(&[N, H, N, H], &[H, N, H, N]).unwrap().macro_f1, 0.0);
        assert_eq!(macro_f1(&[H, N, H, N], &[H, H, N, N]).unwrap().macro_f1, 0.5);
    }

    #[test]
    fn absent_class_is_flagged() {
        let m = macro_f1(&[N, N], &[N, N]).unwrap();
        assert_eq!(m.absent_classes, vec![H]);
        assert_eq!(m.macro_f1, 0.5);
    }

    #[test]
    fn errors() {
        assert!(matches!(macro_f1(&[H], &[H, N]), Err(Error::LengthMismatch { .. })));
        assert!(matches!(macro_f1(&[], &[]), Err(Error::Empty(_))));
    }

    #[test]
    fn symmetric_under_class_swap() {
        let p = [H, H, N, H, N, N, N];
        let g = [H, N, N, H, H, N, N];
        let swap = |v: &[Label]| v.iter().map(|l| l.flipped()).collect::<Vec<_>>();
        let a = macro_f1(&p, &g).unwrap().macro_f1;
        let b = macro_f1(&swap(&p), &swap(&g)).unwrap().macro_f1;
        assert!((a - b).abs() < 1e-12);
    }
}
