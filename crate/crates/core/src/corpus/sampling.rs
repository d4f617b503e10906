use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::manifest::ValidationMode;
use super::post::{ClassCounts, LabeledPost};
use crate::error::{Error, Result};
use crate::label::Label;

/// Seeded generator used for every stochastic corpus operation.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Largest number of non-hate posts `k` such that `hate / (hate + k) >= target_ratio`.
pub fn max_non_hate(hate: usize, target_ratio: f64) -> usize {
    // The epsilon absorbs rounding when h(1-r)/r is an exact integer.
    (hate as f64 * (1.0 - target_ratio) / target_ratio + 1e-9).floor() as usize
}

/// Drops non-hate posts at random until the hate share reaches `target_ratio`.
///
/// Every hate post is kept and the output preserves input order. With `k`
/// from [`max_non_hate`] the resulting ratio lies in `[r, r + 1/(h+k))`.
/// A corpus whose hate share already exceeds the target (or that has no hate
/// posts) is an error in strict mode and returned unchanged in lenient mode.
pub fn downsample_non_hate(
    posts: &[LabeledPost],
    target_ratio: f64,
    seed: u64,
    mode: ValidationMode,
) -> Result<Vec<LabeledPost>> {
    if !(target_ratio > 0.0 && target_ratio < 1.0) {
        return Err(Error::Precondition(format!(
            "target ratio must be in (0, 1), got {target_ratio}"
        )));
    }
    let counts = ClassCounts::of(posts);
    let current = if counts.total() == 0 {
        0.0
    } else {
        counts.hate as f64 / counts.total() as f64
    };
    if counts.hate == 0 || current > target_ratio {
        return match mode {
            ValidationMode::Lenient => Ok(posts.to_vec()),
            ValidationMode::Strict => Err(Error::Precondition(format!(
                "hate ratio {current:.4} ({} of {}) cannot be raised to {target_ratio} by dropping non-hate posts",
                counts.hate,
                counts.total()
            ))),
        };
    }

    let keep = max_non_hate(counts.hate, target_ratio).min(counts.not_hate);
    let non_hate: Vec<usize> = posts
        .iter()
        .enumerate()
        .filter(|(_, p)| p.label == Label::NotHate)
        .map(|(i, _)| i)
        .collect();
    let mut rng = seeded_rng(seed);
    let mut kept = vec![false; posts.len()];
    for pick in index::sample(&mut rng, non_hate.len(), keep) {
        kept[non_hate[pick]] = true;
    }
    Ok(posts
        .iter()
        .enumerate()
        .filter(|(i, p)| p.label == Label::Hate || kept[*i])
        .map(|(_, p)| p.clone())
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplingSpec {
    pub n: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingMode {
    #[default]
    Uniform,
    /// Allocates `n` across classes proportionally (largest remainder).
    Stratified,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NShotSample {
    pub posts: Vec<LabeledPost>,
    pub class_counts: ClassCounts,
}

/// Draws `spec.n` posts without replacement. Output keeps input order.
pub fn sample_n_shot(
    posts: &[LabeledPost],
    spec: SamplingSpec,
    mode: SamplingMode,
) -> Result<NShotSample> {
    if spec.n > posts.len() {
        return Err(Error::Precondition(format!(
            "cannot sample {} posts from {}",
            spec.n,
            posts.len()
        )));
    }
    let mut rng = seeded_rng(spec.seed);
    let mut picked: Vec<usize> = match mode {
        SamplingMode::Uniform => index::sample(&mut rng, posts.len(), spec.n).into_vec(),
        SamplingMode::Stratified => {
            let by_class: Vec<Vec<usize>> = Label::ALL
                .iter()
                .map(|label| {
                    posts
                        .iter()
                        .enumerate()
                        .filter(|(_, p)| p.label == *label)
                        .map(|(i, _)| i)
                        .collect()
                })
                .collect();
            let sizes: Vec<usize> = by_class.iter().map(Vec::len).collect();
            let quotas = proportional_quotas(&sizes, spec.n);
            by_class
                .iter()
                .zip(quotas)
                .flat_map(|(members, quota)| {
                    index::sample(&mut rng, members.len(), quota)
                        .into_iter()
                        .map(|j| members[j])
                        .collect::<Vec<_>>()
                })
                .collect()
        }
    };
    picked.sort_unstable();
    let sample: Vec<LabeledPost> = picked.into_iter().map(|i| posts[i].clone()).collect();
    let class_counts = ClassCounts::of(&sample);
    Ok(NShotSample {
        posts: sample,
        class_counts,
    })
}

/// Hamilton apportionment of `n` over groups of the given sizes.
fn proportional_quotas(sizes: &[usize], n: usize) -> Vec<usize> {
    let total: usize = sizes.iter().sum();
    if total == 0 {
        return vec![0; sizes.len()];
    }
    let mut quotas: Vec<usize> = sizes.iter().map(|s| s * n / total).collect();
    let mut remainders: Vec<(usize, usize)> = sizes
        .iter()
        .enumerate()
        .map(|(i, s)| ((s * n) % total, i))
        .collect();
    // larger remainder first, earlier group on ties
    remainders.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut missing = n - quotas.iter().sum::<usize>();
    for (_, i) in remainders {
        if missing == 0 {
            break;
        }
        if quotas[i] < sizes[i] {
            quotas[i] += 1;
            missing -= 1;
        }
    }
    quotas
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::post::Split;
    use proptest::prelude::*;

    fn corpus(hate: usize, not_hate: usize) -> Vec<LabeledPost> {
        (0..hate + not_hate)
            .map(|i| LabeledPost {
                id: format!("p{i}"),
                text: format!("text {i}"),
                label: if i < hate { Label::Hate } else { Label::NotHate },
                language: "en".into(),
                split: Split::Train,
            })
            .collect()
    }

    /// Brute force: largest k with h/(h+k) >= r.
    fn oracle_k(h: usize, r: f64) -> usize {
        let mut k = 0;
        while (h as f64) / ((h + k + 1) as f64) >= r {
            k += 1;
        }
        k
    }

    #[test]
    fn closed_form_matches_brute_force() {
        for h in 1..=250 {
            for pct in 1..100 {
                let r = pct as f64 / 100.0;
                assert_eq!(max_non_hate(h, r), oracle_k(h, r), "h={h} r={r}");
            }
        }
        assert_eq!(oracle_k(100, 0.22), 354);
    }

    #[test]
    fn hundred_hate_to_22_percent() {
        let posts = corpus(100, 1900);
        let out = downsample_non_hate(&posts, 0.22, 1, ValidationMode::Strict).unwrap();
        let counts = ClassCounts::of(&out);
        assert_eq!((counts.hate, counts.not_hate), (100, 354));
        let ratio = counts.hate as f64 / counts.total() as f64;
        assert!((ratio - 0.2203).abs() < 1e-4);
    }

    #[test]
    fn already_at_target_is_identity() {
        let posts = corpus(50, 50);
        let out = downsample_non_hate(&posts, 0.5, 3, ValidationMode::Lenient).unwrap();
        assert_eq!(out, posts);
    }

    #[test]
    fn above_target_strict_vs_lenient() {
        let posts = corpus(60, 40);
        assert!(downsample_non_hate(&posts, 0.5, 3, ValidationMode::Strict).is_err());
        assert_eq!(downsample_non_hate(&posts, 0.5, 3, ValidationMode::Lenient).unwrap(), posts);
    }

    #[test]
    fn bad_ratio_rejected() {
        let posts = corpus(1, 1);
        for r in [0.0, 1.0, -0.1, f64::NAN] {
            assert!(downsample_non_hate(&posts, r, 0, ValidationMode::Lenient).is_err());
        }
    }

    #[test]
    fn n_shot_edges() {
        let posts = corpus(30, 70);
        let empty = sample_n_shot(&posts, SamplingSpec { n: 0, seed: 1 }, SamplingMode::Uniform).unwrap();
        assert!(empty.posts.is_empty());
        let all = sample_n_shot(&posts, SamplingSpec { n: 100, seed: 1 }, SamplingMode::Uniform).unwrap();
        assert_eq!(all.posts, posts);
        assert_eq!(all.class_counts, ClassCounts { hate: 30, not_hate: 70 });
        assert!(sample_n_shot(&posts, SamplingSpec { n: 101, seed: 1 }, SamplingMode::Uniform).is_err());
    }

    #[test]
    fn n_shot_deterministic() {
        let posts = corpus(30, 70);
        let spec = SamplingSpec { n: 20, seed: 42 };
        let a = sample_n_shot(&posts, spec, SamplingMode::Uniform).unwrap();
        let b = sample_n_shot(&posts, spec, SamplingMode::Uniform).unwrap();
        assert_eq!(a, b);
        let c = sample_n_shot(&posts, SamplingSpec { n: 20, seed: 43 }, SamplingMode::Uniform).unwrap();
        assert_ne!(a.posts, c.posts);
    }

    #[test]
    fn stratified_keeps_proportions() {
        let posts = corpus(30, 70);
        let s = sample_n_shot(&posts, SamplingSpec { n: 20, seed: 5 }, SamplingMode::Stratified).unwrap();
        assert_eq!(s.class_counts, ClassCounts { hate: 6, not_hate: 14 });
        assert_eq!(proportional_quotas(&[1, 1], 1), vec![1, 0]);
        assert_eq!(proportional_quotas(&[3, 0], 3), vec![3, 0]);
    }

    proptest! {
        #[test]
        fn downsample_is_deterministic_subset(h in 1usize..60, n in 0usize..400, seed in any::<u64>(), pct in 1u32..99) {
            let r = pct as f64 / 100.0;
            let posts = corpus(h, n);
            let out = downsample_non_hate(&posts, r, seed, ValidationMode::Lenient).unwrap();
            prop_assert_eq!(&out, &downsample_non_hate(&posts, r, seed, ValidationMode::Lenient).unwrap());
            prop_assert_eq!(ClassCounts::of(&out).hate, h);
            let ids: std::collections::HashSet<_> = posts.iter().map(|p| &p.id).collect();
            prop_assert!(out.iter().all(|p| ids.contains(&p.id)));
            let before = h as f64 / (h + n) as f64;
            if before <= r {
                let k = ClassCounts::of(&out).not_hate;
                let after = h as f64 / (h + k) as f64;
                prop_assert!(after >= r - 1e-12);
                prop_assert!(after < r + 1.0 / (h + k) as f64);
            }
        }
    }
}
