//! Toolkit for building a weakly supervised, fine-grained emotion corpus
//! from short social-media posts.
//!
//! The pipeline:
//!
//! 1. [`lexicon`]: load per-emotion lexical items, expand verb
//!    conjugations, apply manual curation, and compile a token-level
//!    multi-pattern matcher.
//! 2. [`ingest`]: parse JSON-lines post streams, keep original posts,
//!    and normalize text (hashtags removed, emoji kept).
//! 3. [`labeler`]: match lexical items, drop negated matches, and assign
//!    category labels.
//! 4. [`masker`]: replace matched items with `[MASK]` for a per-category
//!    fraction of examples.
//! 5. [`corpus`]: deduplicate, hold out a gold set for annotation, and
//!    write dataset bundles.
//! 6. [`model`] and [`eval`]: a hashed n-gram one-vs-rest logistic
//!    classifier, multi-label metrics, and the masking ablation.

pub mod corpus;
pub mod error;
pub mod eval;
pub mod hashing;
pub mod ingest;
pub mod io;
pub mod labeler;
pub mod lexicon;
pub mod masker;
pub mod model;
pub mod text;

pub use corpus::{category_stats, dedupe, split_gold, CategoryStats, DatasetBundle};
pub use error::{Error, ErrorKind, Result};
pub use eval::{ablation_run, per_category_prf, AblationConfig, AblationReport, EvalReport, MacroPolicy};
pub use ingest::{normalize_text, NormalizeOptions, NormalizedDocument, RawDocument};
pub use labeler::{label_corpus, LabeledExample, LabelingConfig, LabelingPolicy, LabelingStats, MatchSpan};
pub use lexicon::{CompiledMatcher, Lexicon, Schema};
pub use masker::{mask_corpus, mask_example, MaskedExample};
pub use model::{featurize, train, FeatureVector, LinearModel, Prediction, TrainConfig};
