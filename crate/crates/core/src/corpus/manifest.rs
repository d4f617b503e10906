use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::post::{read_posts, DatasetStats, LabeledPost, Split};
use crate::error::{Error, Result};
use crate::io;

/// Expected shape of a dataset file, one TOML document per dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub code: String,
    #[serde(default)]
    pub source: String,
    #[serde(default)]
    pub expected_sizes: ExpectedSizes,
    /// Fraction in [0, 1], computed over every record in the file.
    #[serde(default)]
    pub expected_hate_pct: Option<f64>,
    #[serde(default)]
    pub tolerance: ManifestTolerance,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpectedSizes {
    pub train: Option<usize>,
    pub validation: Option<usize>,
    pub test: Option<usize>,
}

impl ExpectedSizes {
    fn get(&self, split: Split) -> Option<usize> {
        match split {
            Split::Train => self.train,
            Split::Validation => self.validation,
            Split::Test => self.test,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestTolerance {
    /// Allowed absolute deviation of a split's record count.
    #[serde(default)]
    pub sizes: usize,
    /// Allowed absolute deviation of the hate fraction (0.001 = 0.1 percentage points).
    #[serde(default = "default_pct_tolerance")]
    pub hate_pct: f64,
}

fn default_pct_tolerance() -> f64 {
    0.001
}

impl Default for ManifestTolerance {
    fn default() -> Self {
        ManifestTolerance {
            sizes: 0,
            hate_pct: default_pct_tolerance(),
        }
    }
}

impl DatasetManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let manifest: DatasetManifest = io::read_toml(path)?;
        manifest.validate()?;
        Ok(manifest)
    }

    /// Loads every `*.toml` manifest in a directory, sorted by code.
    pub fn load_dir(dir: &Path) -> Result<Vec<Self>> {
        let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
        let mut manifests = Vec::new();
        for entry in entries {
            let path = entry.map_err(|e| Error::io(dir, e))?.path();
            if path.extension().is_some_and(|ext| ext == "toml") {
                manifests.push(Self::load(&path)?);
            }
        }
        manifests.sort_by(|a, b| a.code.cmp(&b.code));
        Ok(manifests)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(pct) = self.expected_hate_pct {
            if !(0.0..=1.0).contains(&pct) {
                return Err(Error::UnitMismatch(format!(
                    "manifest {}: expected_hate_pct {pct} is not a fraction in [0, 1]",
                    self.code
                )));
            }
        }
        if self.tolerance.hate_pct.is_nan() || self.tolerance.hate_pct < 0.0 {
            return Err(Error::Manifest {
                code: self.code.clone(),
                message: "tolerance.hate_pct must be non-negative".into(),
            });
        }
        Ok(())
    }

    /// Compares computed statistics against the declared expectations.
    pub fn check(&self, stats: &DatasetStats) -> Vec<ManifestWarning> {
        let mut warnings = Vec::new();
        for split in [Split::Train, Split::Validation, Split::Test] {
            if let Some(expected) = self.expected_sizes.get(split) {
                let actual = stats.split_count(split);
                if actual.abs_diff(expected) > self.tolerance.sizes {
                    warnings.push(ManifestWarning::SplitSize {
                        split,
                        expected,
                        actual,
                    });
                }
            }
        }
        if let Some(expected) = self.expected_hate_pct {
            let actual = stats.hate_fraction();
            if (actual - expected).abs() > self.tolerance.hate_pct + 1e-12 {
                warnings.push(ManifestWarning::HateFraction { expected, actual });
            }
        }
        warnings
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ManifestWarning {
    SplitSize {
        split: Split,
        expected: usize,
        actual: usize,
    },
    HateFraction {
        expected: f64,
        actual: f64,
    },
}

impl fmt::Display for ManifestWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ManifestWarning::SplitSize {
                split,
                expected,
                actual,
            } => write!(f, "{split} split has {actual} records, expected {expected}"),
            ManifestWarning::HateFraction { expected, actual } => write!(
                f,
                "hate fraction {:.4}, expected {:.4}",
                actual, expected
            ),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValidationMode {
    /// Manifest mismatches are fatal.
    Strict,
    /// Manifest mismatches are attached as warnings.
    #[default]
    Lenient,
}

#[derive(Debug, Clone)]
pub struct LoadedDataset {
    pub posts: Vec<LabeledPost>,
    pub stats: DatasetStats,
    pub warnings: Vec<ManifestWarning>,
}

/// Reads a corpus file and, when a manifest is given, validates it.
pub fn load_dataset(
    path: &Path,
    manifest: Option<&DatasetManifest>,
    mode: ValidationMode,
) -> Result<LoadedDataset> {
    let posts = read_posts(path)?;
    validate_posts(posts, manifest, mode)
}

pub fn validate_posts(
    posts: Vec<LabeledPost>,
    manifest: Option<&DatasetManifest>,
    mode: ValidationMode,
) -> Result<LoadedDataset> {
    let stats = DatasetStats::from_posts(&posts);
    let warnings = match manifest {
        Some(m) => {
            m.validate()?;
            m.check(&stats)
        }
        None => Vec::new(),
    };
    if mode == ValidationMode::Strict && !warnings.is_empty() {
        let code = manifest.map(|m| m.code.clone()).unwrap_or_default();
        let message = warnings
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join("; ");
        return Err(Error::Manifest { code, message });
    }
    Ok(LoadedDataset {
        posts,
        stats,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::label::Label;

    fn fen() -> DatasetManifest {
        toml::from_str(
            r#"
            code = "FEN"
            source = "Twitter"
            expected_hate_pct = 0.22
            [expected_sizes]
            train = 20068
            validation = 500
            "#,
        )
        .unwrap()
    }

    fn corpus(train: usize, validation: usize, hate: usize) -> Vec<LabeledPost> {
        (0..train + validation)
            .map(|i| LabeledPost {
                id: i.to_string(),
                text: format!("post {i}"),
                label: if i < hate { Label::Hate } else { Label::NotHate },
                language: "en".into(),
                split: if i < train { Split::Train } else { Split::Validation },
            })
            .collect()
    }

    #[test]
    fn conforming_fen_file_passes_strict() {
        // 22.0% of 20568 records
        let hate = (0.22f64 * 20568.0).round() as usize;
        let loaded = validate_posts(corpus(20068, 500, hate), Some(&fen()), ValidationMode::Strict).unwrap();
        assert!(loaded.warnings.is_empty());
        assert_eq!(loaded.stats.split_count(Split::Train), 20068);
    }

    #[test]
    fn mismatch_is_warning_or_error() {
        let posts = corpus(20000, 500, 1000);
        let lenient = validate_posts(posts.clone(), Some(&fen()), ValidationMode::Lenient).unwrap();
        assert_eq!(lenient.warnings.len(), 2);
        let strict = validate_posts(posts, Some(&fen()), ValidationMode::Strict);
        assert!(matches!(strict, Err(Error::Manifest { .. })));
    }

    #[test]
    fn percent_units_rejected() {
        let mut m = fen();
        m.expected_hate_pct = Some(22.0);
        assert!(matches!(m.validate(), Err(Error::UnitMismatch(_))));
    }
}
