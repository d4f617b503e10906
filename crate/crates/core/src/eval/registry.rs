use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use super::variant::ModelVariant;
use crate::engine::{InferenceBackend, MockBackend};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    /// Table-driven mock scores (JSONL).
    Mock,
    /// Exported model directory.
    Onnx,
}

/// Where the model for a (variant, language, N, seed) combination lives.
/// Unset selectors match anything; the most specific matching entry wins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackendEntry {
    pub variant: ModelVariant,
    #[serde(default)]
    pub language: Option<String>,
    #[serde(default)]
    pub n_shot: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
    pub kind: BackendKind,
    pub path: PathBuf,
}

impl BackendEntry {
    fn specificity(&self, variant: &ModelVariant, language: &str, n_shot: usize, seed: u64) -> Option<u8> {
        if self.variant != *variant {
            return None;
        }
        let mut rank = 0;
        for matched in [
            self.language.as_deref().map(|l| l == language),
            self.n_shot.map(|n| n == n_shot),
            self.seed.map(|s| s == seed),
        ] {
            match matched {
                Some(true) => rank += 1,
                Some(false) => return None,
                None => {}
            }
        }
        Some(rank)
    }
}

pub trait BackendLoader: Sync {
    fn load(&self, kind: BackendKind, path: &Path) -> Result<Arc<dyn InferenceBackend>>;
}

/// Loads mock backends only.
#[derive(Debug, Clone, Copy, Default)]
pub struct MockLoader;

impl BackendLoader for MockLoader {
    fn load(&self, kind: BackendKind, path: &Path) -> Result<Arc<dyn InferenceBackend>> {
        match kind {
            BackendKind::Mock => Ok(Arc::new(MockBackend::from_path(path)?)),
            BackendKind::Onnx => Err(Error::backend(
                path.display().to_string(),
                "this loader cannot open exported model directories",
            )),
        }
    }
}

type CacheKey = (BackendKind, PathBuf);

/// Resolves grid coordinates to loaded backends, loading each path once.
pub struct BackendRegistry<'a> {
    entries: Vec<BackendEntry>,
    loader: &'a dyn BackendLoader,
    cache: Mutex<HashMap<CacheKey, Arc<dyn InferenceBackend>>>,
}

impl<'a> BackendRegistry<'a> {
    pub fn new(entries: Vec<BackendEntry>, loader: &'a dyn BackendLoader) -> Self {
        BackendRegistry {
            entries,
            loader,
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn entries(&self) -> &[BackendEntry] {
        &self.entries
    }

    pub fn find(&self, variant: &ModelVariant, language: &str, n_shot: usize, seed: u64) -> Option<&BackendEntry> {
        let mut best: Option<(u8, &BackendEntry)> = None;
        for entry in &self.entries {
            if let Some(rank) = entry.specificity(variant, language, n_shot, seed) {
                if best.is_none_or(|(r, _)| rank > r) {
                    best = Some((rank, entry));
                }
            }
        }
        best.map(|(_, e)| e)
    }

    pub fn resolve(
        &self,
        variant: &ModelVariant,
        language: &str,
        n_shot: usize,
        seed: u64,
    ) -> Result<Arc<dyn InferenceBackend>> {
        let entry = self.find(variant, language, n_shot, seed).ok_or_else(|| {
            Error::Config(format!(
                "no backend registered for {variant} / {language} / N={n_shot} / seed {seed}"
            ))
        })?;
        let key = (entry.kind, entry.path.clone());
        if let Some(hit) = self.cache.lock().expect("registry cache poisoned").get(&key) {
            return Ok(Arc::clone(hit));
        }
        let loaded = self.loader.load(entry.kind, &entry.path)?;
        let mut cache = self.cache.lock().expect("registry cache poisoned");
        Ok(Arc::clone(cache.entry(key).or_insert(loaded)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(variant: &str, language: Option<&str>, n_shot: Option<usize>, path: &str) -> BackendEntry {
        BackendEntry {
            variant: variant.parse().unwrap(),
            language: language.map(String::from),
            n_shot,
            seed: None,
            kind: BackendKind::Mock,
            path: path.into(),
        }
    }

    #[test]
    fn most_specific_wins_then_first() {
        let reg = BackendRegistry::new(
            vec![
                entry("X", None, None, "generic"),
                entry("X", Some("es"), None, "es"),
                entry("X", None, Some(20), "n20"),
                entry("X", Some("es"), Some(20), "es20"),
                entry("X", Some("es"), Some(20), "es20-dup"),
            ],
            &MockLoader,
        );
        let x: ModelVariant = "X".parse().unwrap();
        let path = |l, n| reg.find(&x, l, n, 0).unwrap().path.to_str().unwrap().to_string();
        assert_eq!(path("es", 20), "es20");
        assert_eq!(path("es", 0), "es");
        assert_eq!(path("pt", 20), "n20");
        assert_eq!(path("pt", 0), "generic");
        assert!(reg.find(&"X+NLI".parse().unwrap(), "es", 0, 0).is_none());
    }

    #[test]
    fn resolve_loads_once_and_reports_missing() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.jsonl");
        std::fs::write(&p, "{\"match\":\"*\",\"slot\":\"*\",\"scores\":[0.2,0.3,0.5]}\n").unwrap();
        let reg = BackendRegistry::new(vec![entry("X", None, None, p.to_str().unwrap())], &MockLoader);
        let x: ModelVariant = "X".parse().unwrap();
        let a = reg.resolve(&x, "es", 0, 0).unwrap();
        let b = reg.resolve(&x, "it", 20, 3).unwrap();
        assert!(Arc::ptr_eq(&a, &b));
        assert!(reg.resolve(&"M".parse().unwrap(), "es", 0, 0).is_err());
    }
}
