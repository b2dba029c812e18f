//! Synthetic training data: naive ad insertion into existing answers and
//! structured hard positive/negative pairs built from product entities.

pub mod entities;
pub mod naive;
pub mod structured;
pub mod wiki;

use thiserror::Error;

use crate::corpus::CorpusError;
use crate::generator::{GenError, TemplateError};

pub use entities::{
    filter_entities, harvest_entities, EntityRecord, EntitySource, FixtureSource, Harvest, MemorySource, RawPage,
    DEFAULT_INFOBOXES, DEFAULT_PROPERTIES,
};
pub use naive::{insert_ad_naive, NaiveInsertion, PromptChoice, PromptPool};
pub use structured::{gen_structured_pair, run_structured, summarize_and_extract, StructuredRun, SynthPair};
pub use wiki::WikiSource;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid prompt pool: {0}")]
    InvalidPool(String),
    #[error("generator returned an empty completion")]
    EmptyCompletion,
    #[error("entity source unavailable: {0}")]
    SourceUnavailable(String),
    #[error("infobox {0:?} is not in the supported list")]
    UnknownInfobox(String),
    #[error("property {0:?} is not in the supported list")]
    UnknownProperty(String),
    #[error("could not parse a summary and feature list for {product:?}")]
    ParseError { product: String },
    #[error("{which} text for {product:?} does not mention the product")]
    MissingMention { product: String, which: &'static str },
    #[error("entity {0:?} has no raw page text")]
    MissingText(String),
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error(transparent)]
    Generator(#[from] GenError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
