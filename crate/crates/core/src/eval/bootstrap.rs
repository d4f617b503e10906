use rand::Rng;
use serde::{Deserialize, Serialize};

use super::metrics::macro_f1;
use crate::corpus::seeded_rng;
use crate::error::{Error, Result};
use crate::label::Label;

pub const DEFAULT_RESAMPLES: usize = 10_000;
pub const DEFAULT_ALPHA: f64 = 0.05;

/// What the bootstrap resamples.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CiMode {
    /// Per-seed run scores (one macro-F1 per trained model).
    #[default]
    Runs,
    /// Test items, shared across runs; each resample averages the runs'
    /// macro-F1 on the resampled items.
    Items,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub low: f64,
    pub high: f64,
}

fn check_params(resamples: usize, alpha: f64) -> Result<()> {
    if resamples == 0 {
        return Err(Error::Precondition("bootstrap needs at least one resample".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Precondition(format!("alpha must be in (0, 1), got {alpha}")));
    }
    Ok(())
}

/// Sorted-sample indices of the `alpha/2` and `1 - alpha/2` percentiles
/// (nearest rank).
pub fn percentile_indices(resamples: usize, alpha: f64) -> (usize, usize) {
    let last = resamples - 1;
    let lo = ((alpha / 2.0) * resamples as f64).floor() as usize;
    let hi = ((1.0 - alpha / 2.0) * resamples as f64).ceil() as usize;
    (lo.min(last), hi.saturating_sub(1).min(last))
}

fn interval_from(mut means: Vec<f64>, alpha: f64, min: f64, max: f64) -> Interval {
    means.sort_by(f64::total_cmp);
    let (lo, hi) = percentile_indices(means.len(), alpha);
    Interval {
        low: means[lo].clamp(min, max),
        high: means[hi].clamp(min, max),
    }
}

/// Percentile bootstrap interval of the mean of `scores`.
///
/// Each of the `resamples` draws picks `scores.len()` indices uniformly with
/// replacement from a ChaCha8 stream seeded with `seed` and averages the
/// picked scores (summed in draw order). Endpoints are clamped to the score
/// range, which also absorbs rounding for constant inputs.
pub fn bootstrap_ci(scores: &[f64], resamples: usize, alpha: f64, seed: u64) -> Result<Interval> {
    if scores.is_empty() {
        return Err(Error::Precondition("bootstrap needs at least one score".into()));
    }
    check_params(resamples, alpha)?;
    if let Some(bad) = scores.iter().find(|s| !s.is_finite()) {
        return Err(Error::Precondition(format!("non-finite score {bad}")));
    }
    let n = scores.len();
    let mut rng = seeded_rng(seed);
    let means = (0..resamples)
        .map(|_| {
            let sum: f64 = (0..n).map(|_| scores[rng.random_range(0..n)]).sum();
            sum / n as f64
        })
        .collect();
    let min = scores.iter().copied().fold(f64::INFINITY, f64::min);
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(interval_from(means, alpha, min, max))
}

/// Item-level bootstrap over one shared test set. `runs[r]` holds run `r`'s
/// predictions aligned with `gold`.
pub fn bootstrap_items_ci(
    runs: &[Vec<Label>],
    gold: &[Label],
    resamples: usize,
    alpha: f64,
    seed: u64,
) -> Result<Interval> {
    if runs.is_empty() || gold.is_empty() {
        return Err(Error::Precondition("item bootstrap needs runs and test items".into()));
    }
    check_params(resamples, alpha)?;
    let n = gold.len();
    let mut rng = seeded_rng(seed);
    let mut idx = vec![0usize; n];
    let mut g = vec![Label::NotHate; n];
    let mut p = vec![Label::NotHate; n];
    let mut means = Vec::with_capacity(resamples);
    for _ in 0..resamples {
        for (i, slot) in idx.iter_mut().enumerate() {
            *slot = rng.random_range(0..n);
            g[i] = gold[*slot];
        }
        let mut mean = 0.0;
        for (k, run) in runs.iter().enumerate() {
            for (i, &j) in idx.iter().enumerate() {
                p[i] = run[j];
            }
            mean += (macro_f1(&p, &g)?.macro_f1 - mean) / (k + 1) as f64;
        }
        means.push(mean);
    }
    Ok(interval_from(means, alpha, 0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn constant_scores_give_zero_width() {
        let ci = bootstrap_ci(&[0.61; 10], 1000, 0.05, 3).unwrap();
        assert_eq!((ci.low, ci.high), (0.61, 0.61));
    }

    #[test]
    fn percentile_indices_examples() {
        assert_eq!(percentile_indices(10_000, 0.05), (250, 9749));
        assert_eq!(percentile_indices(1, 0.05), (0, 0));
        assert_eq!(percentile_indices(40, 0.05), (1, 38));
    }

    #[test]
    fn rejects_bad_params() {
        assert!(bootstrap_ci(&[], 10, 0.05, 0).is_err());
        assert!(bootstrap_ci(&[0.5], 0, 0.05, 0).is_err());
        assert!(bootstrap_ci(&[0.5], 10, 1.0, 0).is_err());
        assert!(bootstrap_ci(&[f64::NAN], 10, 0.5, 0).is_err());
    }

    #[test]
    fn deterministic_for_seed() {
        let s = [0.5, 0.6, 0.55, 0.7, 0.62];
        assert_eq!(bootstrap_ci(&s, 500, 0.05, 9).unwrap(), bootstrap_ci(&s, 500, 0.05, 9).unwrap());
    }

    #[test]
    fn item_bootstrap_perfect_runs() {
        use Label::{Hate as H, NotHate as N};
        let gold = vec![H, N, H, N, N, H];
        let ci = bootstrap_items_ci(&[gold.clone(), gold.clone()], &gold, 200, 0.05, 1).unwrap();
        assert!(ci.low <= ci.high && ci.high <= 1.0);
    }

    proptest! {
        #[test]
        fn endpoints_within_range(scores in prop::collection::vec(0.0f64..=1.0, 1..15), seed: u64) {
            let ci = bootstrap_ci(&scores, 300, 0.05, seed).unwrap();
            let min = scores.iter().copied().fold(f64::INFINITY, f64::min);
            let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(min <= ci.low && ci.low <= ci.high && ci.high <= max);
            prop_assert!(ci.high - ci.low <= max - min);
        }
    }
}
