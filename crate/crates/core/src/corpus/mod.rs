//! Corpus model and the file-based data construction steps: loading and
//! manifest validation, non-hate downsampling, N-shot sampling, conversion
//! to NLI pairs and cross-lingual premise/hypothesis shuffling.

mod manifest;
mod nli;
mod post;
mod sampling;

pub use manifest::{
    load_dataset, validate_posts, DatasetManifest, ExpectedSizes, LoadedDataset, ManifestTolerance,
    ManifestWarning, ValidationMode,
};
pub use nli::{
    common_languages, hs_to_nli, shuffle_xnli_languages, NliExample, NliLabel, ParallelNliExample,
    HATE_HYPOTHESIS,
};
pub use post::{
    filter_split, parse_posts, read_posts, ClassCounts, DatasetStats, LabeledPost, Split,
};
pub use sampling::{
    downsample_non_hate, max_non_hate, sample_n_shot, seeded_rng, NShotSample, SamplingMode,
    SamplingSpec,
};
