//! Backend-agnostic NLI scoring and the binary decision taken from it.

mod backend;
mod catalog;
mod classify;
mod policy;
mod scores;

pub use backend::{score_pair, InferenceBackend, MockBackend, MockEntry, WILDCARD};
pub use catalog::{resolve_hypothesis, Hypothesis, HypothesisCatalog, ModelKind, Slot};
pub use classify::{classify_main, MainPrediction};
pub(crate) use classify::classify_normalized;
pub use policy::{decide, DecisionPolicy};
pub use scores::{NliScores, SUM_TOLERANCE};
