//! Inference backend over an exported model directory: `model.onnx`,
//! `tokenizer.json` and `nli_metadata.json` naming the output indices.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use hsnli_core::engine::{Hypothesis, InferenceBackend, MockBackend, NliScores};
use hsnli_core::eval::{BackendKind, BackendLoader};
use hsnli_core::{Error, Result};
use serde::{Deserialize, Serialize};
use tokenizers::{Tokenizer, TruncationParams, TruncationStrategy};
use tract_onnx::prelude::*;

pub const MODEL_FILE: &str = "model.onnx";
pub const TOKENIZER_FILE: &str = "tokenizer.json";
pub const METADATA_FILE: &str = "nli_metadata.json";
pub const DEFAULT_MAX_SEQUENCE_LENGTH: usize = 128;

/// Contents of `nli_metadata.json`.
///
/// `label_indices` maps `entailment`/`neutral`/`contradiction` to logit
/// positions. A two-way classifier may instead name `hate` and `not_hate`,
/// which are read as entailment and contradiction with zero neutral mass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NliMetadata {
    #[serde(default)]
    pub model_id: Option<String>,
    pub label_indices: BTreeMap<String, usize>,
    #[serde(default = "default_max_len")]
    pub max_sequence_length: usize,
}

fn default_max_len() -> usize {
    DEFAULT_MAX_SEQUENCE_LENGTH
}

/// Where each NLI class lives in the logit vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputLayout {
    ThreeWay {
        entailment: usize,
        neutral: usize,
        contradiction: usize,
    },
    Binary {
        hate: usize,
        not_hate: usize,
    },
}

impl OutputLayout {
    fn width(&self) -> usize {
        match *self {
            OutputLayout::ThreeWay {
                entailment,
                neutral,
                contradiction,
            } => 1 + entailment.max(neutral).max(contradiction),
            OutputLayout::Binary { hate, not_hate } => 1 + hate.max(not_hate),
        }
    }
}

impl NliMetadata {
    pub fn layout(&self) -> std::result::Result<OutputLayout, String> {
        let idx = &self.label_indices;
        let keys: Vec<&str> = idx.keys().map(String::as_str).collect();
        let layout = match keys.as_slice() {
            ["contradiction", "entailment", "neutral"] => OutputLayout::ThreeWay {
                entailment: idx["entailment"],
                neutral: idx["neutral"],
                contradiction: idx["contradiction"],
            },
            ["hate", "not_hate"] => OutputLayout::Binary {
                hate: idx["hate"],
                not_hate: idx["not_hate"],
            },
            _ => {
                return Err(format!(
                    "label_indices must name entailment, neutral and contradiction (or hate and not_hate), got {keys:?}"
                ))
            }
        };
        let mut seen: Vec<usize> = idx.values().copied().collect();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != idx.len() {
            return Err("label_indices must be distinct".into());
        }
        if self.max_sequence_length < 2 {
            return Err("max_sequence_length must be at least 2".into());
        }
        Ok(layout)
    }
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exp: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let sum: f64 = exp.iter().sum();
    exp.into_iter().map(|e| e / sum).collect()
}

/// Maps one row of logits to NLI scores through the metadata layout.
pub fn scores_from_logits(logits: &[f64], layout: OutputLayout) -> std::result::Result<NliScores, String> {
    if logits.len() < layout.width() {
        return Err(format!(
            "model emits {} logits but the metadata needs {}",
            logits.len(),
            layout.width()
        ));
    }
    if logits.iter().any(|l| !l.is_finite()) {
        return Err(format!("non-finite logits {logits:?}"));
    }
    let (e, n, c) = match layout {
        OutputLayout::ThreeWay {
            entailment,
            neutral,
            contradiction,
        } => {
            let p = softmax(&[logits[entailment], logits[neutral], logits[contradiction]]);
            (p[0], p[1], p[2])
        }
        OutputLayout::Binary { hate, not_hate } => {
            let p = softmax(&[logits[hate], logits[not_hate]]);
            (p[0], 0.0, p[1])
        }
    };
    NliScores::new(e, n, c).map_err(|err| err.to_string())
}

type Plan = Arc<TypedRunnableModel>;

/// A loaded exported model. Scoring is thread-safe: the plan is immutable
/// and every call builds its own execution state.
pub struct OnnxBackend {
    identity: String,
    tokenizer: Tokenizer,
    plan: Plan,
    inputs: Vec<ModelInput>,
    logits_output: usize,
    layout: OutputLayout,
    metadata: NliMetadata,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ModelInput {
    InputIds,
    AttentionMask,
    TokenTypeIds,
}

impl std::fmt::Debug for OnnxBackend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("OnnxBackend")
            .field("identity", &self.identity)
            .field("metadata", &self.metadata)
            .finish_non_exhaustive()
    }
}

fn fail(identity: &str, message: impl std::fmt::Display) -> Error {
    Error::Backend {
        backend: identity.to_string(),
        message: message.to_string(),
    }
}

fn required(dir: &Path, name: &str, identity: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    if path.is_file() {
        Ok(path)
    } else {
        Err(fail(identity, format!("model directory is missing `{name}`")))
    }
}

impl OnnxBackend {
    /// Loads and verifies an exported model directory.
    pub fn load(dir: &Path) -> Result<Self> {
        let identity = dir.display().to_string();
        let model_path = required(dir, MODEL_FILE, &identity)?;
        let tokenizer_path = required(dir, TOKENIZER_FILE, &identity)?;
        let metadata_path = required(dir, METADATA_FILE, &identity)?;

        let metadata_text = std::fs::read_to_string(&metadata_path).map_err(|e| Error::Io {
            path: metadata_path.clone(),
            source: e,
        })?;
        let metadata: NliMetadata = serde_json::from_str(&metadata_text)
            .map_err(|e| fail(&identity, format!("{METADATA_FILE}: {e}")))?;
        let layout = metadata
            .layout()
            .map_err(|e| fail(&identity, format!("{METADATA_FILE}: {e}")))?;
        let identity = metadata.model_id.clone().map_or(identity, |id| format!("{id} ({})", dir.display()));

        let mut tokenizer = Tokenizer::from_file(&tokenizer_path)
            .map_err(|e| fail(&identity, format!("{TOKENIZER_FILE}: {e}")))?;
        tokenizer
            .with_truncation(Some(TruncationParams {
                max_length: metadata.max_sequence_length,
                strategy: TruncationStrategy::LongestFirst,
                ..Default::default()
            }))
            .map_err(|e| fail(&identity, format!("{TOKENIZER_FILE}: {e}")))?;
        tokenizer.with_padding(None);

        let model = tract_onnx::onnx()
            .model_for_path(&model_path)
            .map_err(|e| fail(&identity, format!("{MODEL_FILE}: {e:#}")))?;
        let mut inputs = Vec::new();
        for outlet in model.input_outlets().map_err(|e| fail(&identity, e))? {
            let name = model.node(outlet.node).name.as_str();
            inputs.push(match name {
                "input_ids" => ModelInput::InputIds,
                "attention_mask" => ModelInput::AttentionMask,
                "token_type_ids" => ModelInput::TokenTypeIds,
                other => return Err(fail(&identity, format!("{MODEL_FILE}: unsupported model input `{other}`"))),
            });
        }
        if !inputs.contains(&ModelInput::InputIds) {
            return Err(fail(&identity, format!("{MODEL_FILE}: model has no `input_ids` input")));
        }
        let outputs = model.output_outlets().map_err(|e| fail(&identity, e))?.to_vec();
        let logits_output = outputs
            .iter()
            .position(|o| model.node(o.node).name == "logits" || model.outlet_label(*o) == Some("logits"))
            .unwrap_or(0);
        let plan = model
            .into_optimized()
            .and_then(|m| m.into_runnable())
            .map_err(|e| fail(&identity, format!("{MODEL_FILE}: {e:#}")))?;

        Ok(OnnxBackend {
            identity,
            tokenizer,
            plan,
            inputs,
            logits_output,
            layout,
            metadata,
        })
    }

    pub fn metadata(&self) -> &NliMetadata {
        &self.metadata
    }

    /// Raw logits for one pair, after tokenization and truncation.
    pub fn logits(&self, premise: &str, hypothesis: &str) -> Result<Vec<f64>> {
        let encoding = self
            .tokenizer
            .encode((premise, hypothesis), true)
            .map_err(|e| fail(&self.identity, format!("tokenization failed: {e}")))?;
        let len = encoding.len();
        let column = |values: &[u32]| -> Result<TValue> {
            let data: Vec<i64> = values.iter().map(|&v| i64::from(v)).collect();
            let tensor = tract_ndarray::Array2::from_shape_vec((1, len), data)
                .map_err(|e| fail(&self.identity, e))?;
            Ok(Tensor::from(tensor).into())
        };
        let mut feed = TVec::new();
        for input in &self.inputs {
            feed.push(match input {
                ModelInput::InputIds => column(encoding.get_ids())?,
                ModelInput::AttentionMask => column(encoding.get_attention_mask())?,
                ModelInput::TokenTypeIds => column(encoding.get_type_ids())?,
            });
        }
        let outputs = self
            .plan
            .run(feed)
            .map_err(|e| fail(&self.identity, format!("inference failed: {e:#}")))?;
        let logits = outputs
            .get(self.logits_output)
            .ok_or_else(|| fail(&self.identity, "model produced no logits"))?
            .cast_to::<f64>()
            .map_err(|e| fail(&self.identity, e))?;
        let view = logits
            .to_plain_array_view::<f64>()
            .map_err(|e| fail(&self.identity, e))?;
        Ok(view.iter().copied().collect())
    }
}

impl InferenceBackend for OnnxBackend {
    fn identity(&self) -> &str {
        &self.identity
    }

    fn score(&self, premise: &str, hypothesis: &Hypothesis) -> Result<NliScores> {
        let logits = self.logits(premise, &hypothesis.text)?;
        scores_from_logits(&logits, self.layout).map_err(|e| fail(&self.identity, e))
    }
}

/// Opens mock tables and exported model directories.
#[derive(Debug, Clone, Copy, Default)]
pub struct FileLoader;

impl BackendLoader for FileLoader {
    fn load(&self, kind: BackendKind, path: &Path) -> Result<Arc<dyn InferenceBackend>> {
        Ok(match kind {
            BackendKind::Mock => Arc::new(MockBackend::from_path(path)?),
            BackendKind::Onnx => Arc::new(OnnxBackend::load(path)?),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta(pairs: &[(&str, usize)]) -> NliMetadata {
        NliMetadata {
            model_id: None,
            label_indices: pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            max_sequence_length: 128,
        }
    }

    #[test]
    fn layout_validation() {
        assert!(meta(&[("entailment", 0), ("neutral", 1), ("contradiction", 2)]).layout().is_ok());
        assert!(meta(&[("hate", 1), ("not_hate", 0)]).layout().is_ok());
        assert!(meta(&[("entailment", 0), ("neutral", 0), ("contradiction", 2)]).layout().is_err());
        assert!(meta(&[("entailment", 0), ("contradiction", 2)]).layout().is_err());
    }

    #[test]
    fn index_mapping_and_binary() {
        let layout = meta(&[("contradiction", 0), ("neutral", 1), ("entailment", 2)]).layout().unwrap();
        let s = scores_from_logits(&[0.0, 0.0, 10.0], layout).unwrap();
        assert!(s.entailment() > 0.99);
        let binary = meta(&[("not_hate", 0), ("hate", 1)]).layout().unwrap();
        let s = scores_from_logits(&[0.0, 0.0], binary).unwrap();
        assert_eq!(s.to_array(), [0.5, 0.0, 0.5]);
        assert!(scores_from_logits(&[1.0, 2.0], layout).is_err());
        assert!(scores_from_logits(&[f64::NAN, 0.0, 0.0], layout).is_err());
    }
}
