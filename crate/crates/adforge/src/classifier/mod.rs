//! The ad-classifier `H`: featurized logistic-regression and naive-Bayes
//! models, their on-disk format, and the [`Scorer`] abstraction shared with
//! remote classifiers.

pub mod logreg;
pub mod naive_bayes;
pub mod remote;
pub mod text;

use std::io::ErrorKind;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{DatasetSplit, Label, LabeledExample};

pub use logreg::{EpochOrder, LogRegConfig, LogRegParams, TrainingTrace};
pub use naive_bayes::{NaiveBayesConfig, NaiveBayesParams};
pub use remote::{remote_score, RemoteScorer};
pub use text::{featurize, model_input, tokenize, FeatureVector, Vocabulary, SEPARATOR};

pub const FORMAT_VERSION: u32 = 1;
pub const DEFAULT_THRESHOLD: f64 = 0.5;

#[derive(Debug, Error)]
pub enum ClassifierError {
    #[error("cannot build a vocabulary from zero documents")]
    EmptyCorpus,
    #[error("no term survived the vocabulary filters")]
    EmptyVocabulary,
    #[error("training data contains a single class")]
    SingleClassTraining,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("unsupported model format version {found:?} (expected {FORMAT_VERSION})")]
    FormatVersionMismatch { found: Option<u64> },
    #[error("network error: {0}")]
    Network(String),
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("request timed out")]
    Timeout,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Anything that maps a (query, response) pair to an ad probability.
pub trait Scorer: Sync {
    fn score(&self, query: &str, response: &str) -> Result<f64, ClassifierError>;
}

impl<S: Scorer + ?Sized> Scorer for &S {
    fn score(&self, query: &str, response: &str) -> Result<f64, ClassifierError> {
        (**self).score(query, response)
    }
}

/// Adapts a plain function of the response text into a [`Scorer`].
pub struct FnScorer<F>(pub F);

impl<F> Scorer for FnScorer<F>
where
    F: Fn(&str) -> f64 + Sync,
{
    fn score(&self, _query: &str, response: &str) -> Result<f64, ClassifierError> {
        Ok((self.0)(response))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Logreg,
    NaiveBayes,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Parameters {
    Logreg(LogRegParams),
    NaiveBayes(NaiveBayesParams),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierModel {
    pub vocabulary: Vocabulary,
    pub parameters: Parameters,
    pub recipe_tag: String,
    pub threshold: f64,
    pub final_train_loss: Option<f64>,
}

/// On-disk layout.
#[derive(Serialize, Deserialize)]
struct ModelFile {
    format_version: u32,
    kind: ModelKind,
    recipe_tag: String,
    threshold: f64,
    vocabulary: Vocabulary,
    parameters: Parameters,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    final_train_loss: Option<f64>,
}

impl ClassifierModel {
    pub fn kind(&self) -> ModelKind {
        match self.parameters {
            Parameters::Logreg(_) => ModelKind::Logreg,
            Parameters::NaiveBayes(_) => ModelKind::NaiveBayes,
        }
    }

    /// A logistic model with explicit parameters; mostly useful in tests.
    pub fn logreg(vocabulary: Vocabulary, params: LogRegParams) -> Self {
        Self {
            vocabulary,
            parameters: Parameters::Logreg(params),
            recipe_tag: String::new(),
            threshold: DEFAULT_THRESHOLD,
            final_train_loss: None,
        }
    }

    pub fn with_tag(mut self, tag: impl Into<String>) -> Self {
        self.recipe_tag = tag.into();
        self
    }

    /// P(ad) for already-joined model input text.
    pub fn predict_text(&self, text: &str) -> f64 {
        let p = match &self.parameters {
            Parameters::Logreg(params) => params.probability(&featurize(text, &self.vocabulary)),
            Parameters::NaiveBayes(params) => params.posterior_ad(&self.vocabulary.term_counts(text)),
        };
        p.clamp(0.0, 1.0)
    }

    /// `H(query, response)`: the probability that the response carries an ad.
    pub fn predict_proba(&self, query: &str, response: &str) -> f64 {
        self.predict_text(&model_input(query, response))
    }

    pub fn decide(&self, probability: f64) -> Label {
        Label::from_bool(probability >= self.threshold)
    }

    pub fn predict(&self, query: &str, response: &str) -> Label {
        self.decide(self.predict_proba(query, response))
    }

    fn validate(&self) -> Result<(), String> {
        let dim = self.vocabulary.len();
        let ok = match &self.parameters {
            Parameters::Logreg(p) => p.weights.len() == dim,
            Parameters::NaiveBayes(p) => p.log_likelihood.len() == dim,
        };
        if ok {
            Ok(())
        } else {
            Err(format!("parameters do not align with {dim} vocabulary terms"))
        }
    }
}

impl Scorer for ClassifierModel {
    fn score(&self, query: &str, response: &str) -> Result<f64, ClassifierError> {
        Ok(self.predict_proba(query, response))
    }
}

/// Vocabulary filters shared by both trainers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VocabConfig {
    pub min_df: u32,
    pub max_terms: usize,
}

impl Default for VocabConfig {
    fn default() -> Self {
        Self {
            min_df: 1,
            max_terms: 50_000,
        }
    }
}

/// Builds the vocabulary over the model inputs of `examples`.
pub fn build_vocabulary(
    examples: &[LabeledExample],
    min_df: u32,
    max_terms: usize,
) -> Result<Vocabulary, ClassifierError> {
    let docs: Vec<String> = examples
        .iter()
        .map(|e| model_input(&e.query, &e.response))
        .collect();
    Vocabulary::from_documents(docs.iter().map(String::as_str), min_df, max_terms)
}

fn check_both_labels(train: &[LabeledExample]) -> Result<(), ClassifierError> {
    let ads = train.iter().filter(|e| e.label.is_ad()).count();
    if ads == 0 || ads == train.len() {
        return Err(ClassifierError::SingleClassTraining);
    }
    Ok(())
}

pub fn train_logreg(
    split: &DatasetSplit,
    config: &LogRegConfig,
    vocab: &VocabConfig,
) -> Result<ClassifierModel, ClassifierError> {
    train_logreg_ordered(split, config, vocab, &EpochOrder::Shuffled).map(|(m, _)| m)
}

/// Trains on `split.train`, presenting rows as `order` dictates. Indices in
/// `order` refer to positions in `split.train`.
pub fn train_logreg_ordered(
    split: &DatasetSplit,
    config: &LogRegConfig,
    vocab: &VocabConfig,
    order: &EpochOrder,
) -> Result<(ClassifierModel, TrainingTrace), ClassifierError> {
    check_both_labels(&split.train)?;
    if config.learning_rate.is_nan() || config.learning_rate <= 0.0 || config.l2 < 0.0 {
        return Err(ClassifierError::InvalidConfig(
            "learning_rate must be positive and l2 non-negative".into(),
        ));
    }
    if let EpochOrder::Curriculum { order, .. } = order {
        let mut sorted = order.clone();
        sorted.sort_unstable();
        if sorted != (0..split.train.len()).collect::<Vec<_>>() {
            return Err(ClassifierError::InvalidConfig(
                "curriculum order is not a permutation of the training rows".into(),
            ));
        }
    }
    let vocabulary = build_vocabulary(&split.train, vocab.min_df, vocab.max_terms)?;
    let rows: Vec<logreg::Row> = split
        .train
        .iter()
        .map(|e| {
            let x = featurize(&model_input(&e.query, &e.response), &vocabulary);
            (x, f64::from(e.label.as_u8()))
        })
        .collect();
    let (params, trace) = logreg::fit(&rows, vocabulary.len(), config, order);
    let model = ClassifierModel {
        vocabulary,
        parameters: Parameters::Logreg(params),
        recipe_tag: String::new(),
        threshold: DEFAULT_THRESHOLD,
        final_train_loss: Some(trace.final_objective()),
    };
    Ok((model, trace))
}

pub fn train_naive_bayes(
    split: &DatasetSplit,
    config: &NaiveBayesConfig,
    vocab: &VocabConfig,
) -> Result<ClassifierModel, ClassifierError> {
    check_both_labels(&split.train)?;
    if config.alpha.is_nan() || config.alpha <= 0.0 {
        return Err(ClassifierError::InvalidConfig("alpha must be positive".into()));
    }
    let vocabulary = build_vocabulary(&split.train, vocab.min_df, vocab.max_terms)?;
    let docs: Vec<_> = split
        .train
        .iter()
        .map(|e| {
            (
                vocabulary.term_counts(&model_input(&e.query, &e.response)),
                e.label.is_ad(),
            )
        })
        .collect();
    let params = NaiveBayesParams::fit(&docs, vocabulary.len(), config.alpha);
    Ok(ClassifierModel {
        vocabulary,
        parameters: Parameters::NaiveBayes(params),
        recipe_tag: String::new(),
        threshold: DEFAULT_THRESHOLD,
        final_train_loss: None,
    })
}

pub fn persist_model(model: &ClassifierModel, path: &Path) -> Result<(), ClassifierError> {
    let file = ModelFile {
        format_version: FORMAT_VERSION,
        kind: model.kind(),
        recipe_tag: model.recipe_tag.clone(),
        threshold: model.threshold,
        vocabulary: model.vocabulary.clone(),
        parameters: model.parameters.clone(),
        final_train_loss: model.final_train_loss,
    };
    let json = serde_json::to_vec(&file).map_err(std::io::Error::from)?;
    std::fs::write(path, json)?;
    Ok(())
}

pub fn restore_model(path: &Path) -> Result<ClassifierModel, ClassifierError> {
    let bytes = std::fs::read(path)?;
    let invalid = |msg: String| ClassifierError::Io(std::io::Error::new(ErrorKind::InvalidData, msg));
    let value: serde_json::Value =
        serde_json::from_slice(&bytes).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
    let version = value.get("format_version").and_then(|v| v.as_u64());
    if version != Some(u64::from(FORMAT_VERSION)) {
        return Err(ClassifierError::FormatVersionMismatch { found: version });
    }
    let file: ModelFile =
        serde_json::from_value(value).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
    let model = ClassifierModel {
        vocabulary: file.vocabulary,
        parameters: file.parameters,
        recipe_tag: file.recipe_tag,
        threshold: file.threshold,
        final_train_loss: file.final_train_loss,
    };
    if model.kind() != file.kind {
        return Err(invalid(format!(
            "declared kind {:?} does not match parameters",
            file.kind
        )));
    }
    model.validate().map_err(invalid)?;
    Ok(model)
}
