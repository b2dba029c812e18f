//! Ad integration and ad detection for retrieval-augmented conversational search.
//!
//! The crate models an adversarial loop between two components:
//!
//! - an **ad-classifier** that scores how likely a response contains an
//!   advertisement ([`classifier`]), trained through versioned recipes
//!   ([`curriculum`]) on labeled and synthetic data ([`synthgen`]);
//! - an **ad-rewriter** that weaves an item into an ad-free answer, either
//!   zero-shot, by best-of-N selection against the classifier, or through an
//!   emitted fine-tuning dataset ([`generator`], [`optimizer`]).
//!
//! Detection metrics, the detection-accuracy matrix and the paired Wilcoxon
//! signed-rank test live in [`eval`]. Every step can run offline against the
//! deterministic [`generator::StubGenerator`].
//!
//! ## Examples
//!
//! Each major capability has a runnable example in `examples/`:
//!
//! ```bash
//! cargo run -p adforge --example train_classifier
//! cargo run -p adforge --example best_of_n
//! cargo run -p adforge --example sft_dataset
//! cargo run -p adforge --example naive_synthetic
//! cargo run -p adforge --example structured_synthetic
//! cargo run -p adforge --example curriculum_recipes
//! cargo run -p adforge --example detection_report
//! cargo run -p adforge --example wilcoxon
//! cargo run -p adforge --example prompts
//! cargo run -p adforge --example demo_workspace -- /tmp/adforge-demo
//! ```
//!
//! The `adforge` binary wraps the whole pipeline behind file-based subcommands
//! (see [`cli`]).

pub mod classifier;
pub mod cli;
pub mod corpus;
pub mod curriculum;
pub mod demo;
pub mod eval;
pub mod generator;
pub mod optimizer;
pub mod synthgen;
mod util;

pub use classifier::{ClassifierModel, Scorer};
pub use corpus::{AdItem, DatasetSplit, Label, LabeledExample, Passage, QueryTask, Source};
pub use generator::{Candidate, GenerationRequest, Generator, StubGenerator};
