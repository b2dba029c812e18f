//! Training recipes: which data sources a classifier version sees, in what
//! order, and how the synthetic sources are balanced.
//!
//! | tag  | sources                          | curriculum | upsampled structured |
//! |------|----------------------------------|------------|----------------------|
//! | v0.0 | webis                            | no         | no                   |
//! | v0.1 | webis, naive (1 prompt)          | no         | no                   |
//! | v0.2 | webis, naive (12 prompts)        | no         | no                   |
//! | v0.3 | webis, naive, structured         | no         | no                   |
//! | v0.4 | webis, naive, structured         | yes        | no                   |
//! | v0.5 | webis, naive, structured         | yes        | yes                  |
//!
//! Difficulty is `1 - p_ref(true label)` under a reference model (a v0.1
//! analogue by default).

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classifier::{
    train_logreg_ordered, train_naive_bayes, ClassifierError, ClassifierModel, EpochOrder, LogRegConfig, ModelKind,
    NaiveBayesConfig, TrainingTrace, VocabConfig,
};
use crate::corpus::{DatasetSplit, Label, LabeledExample, Source};
use crate::util::bounded_map;

pub const RECIPE_TAGS: [&str; 6] = ["v0.0", "v0.1", "v0.2", "v0.3", "v0.4", "v0.5"];

#[derive(Debug, Error)]
pub enum CurriculumError {
    #[error("balance_upsample needs two non-empty lists")]
    EmptyInput,
    #[error("unknown recipe {0:?}")]
    UnknownRecipe(String),
    #[error("recipe {recipe} needs the {dataset} dataset")]
    MissingSource { recipe: String, dataset: &'static str },
    #[error("recipe {0} orders by difficulty and needs a reference model")]
    MissingReference(String),
    #[error("invalid recipe: {0}")]
    InvalidRecipe(String),
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredExample {
    pub example: LabeledExample,
    pub difficulty: f64,
    /// Position in the list that was ordered.
    pub index: usize,
}

/// `1 - p_ref(true label)`.
pub fn difficulty_score(example: &LabeledExample, reference: &ClassifierModel) -> f64 {
    let p_ad = reference.predict_proba(&example.query, &example.response);
    let p_true = match example.label {
        Label::Ad => p_ad,
        Label::NoAd => 1.0 - p_ad,
    };
    (1.0 - p_true).clamp(0.0, 1.0)
}

fn scoring_threads() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get()).min(8)
}

/// Scores every example and sorts easy to hard; ties keep input order.
pub fn order_curriculum(examples: &[LabeledExample], reference: &ClassifierModel) -> Vec<ScoredExample> {
    let difficulties = if examples.len() < 256 {
        examples.iter().map(|e| difficulty_score(e, reference)).collect()
    } else {
        let chunks: Vec<&[LabeledExample]> = examples.chunks(examples.len().div_ceil(scoring_threads())).collect();
        bounded_map(&chunks, chunks.len(), |_, chunk| {
            chunk.iter().map(|e| difficulty_score(e, reference)).collect::<Vec<_>>()
        })
        .concat()
    };
    sort_by_difficulty(examples, &difficulties)
}

pub(crate) fn sort_by_difficulty(examples: &[LabeledExample], difficulties: &[f64]) -> Vec<ScoredExample> {
    let mut scored: Vec<ScoredExample> = examples
        .iter()
        .zip(difficulties)
        .enumerate()
        .map(|(index, (example, &difficulty))| ScoredExample {
            example: example.clone(),
            difficulty,
            index,
        })
        .collect();
    scored.sort_by(|a, b| a.difficulty.total_cmp(&b.difficulty));
    scored
}

/// `primary` followed by `secondary` cycled to exactly `primary.len()` items.
pub fn balance_upsample(
    primary: &[LabeledExample],
    secondary: &[LabeledExample],
) -> Result<Vec<LabeledExample>, CurriculumError> {
    if primary.is_empty() || secondary.is_empty() {
        return Err(CurriculumError::EmptyInput);
    }
    let mut out = primary.to_vec();
    out.extend(secondary.iter().cycle().take(primary.len()).cloned());
    Ok(out)
}

/// Describes one classifier version.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecipeCard {
    pub tag: String,
    pub sources: Vec<Source>,
    #[serde(default)]
    pub curriculum: bool,
    /// Recipe tag the reference model is expected to carry.
    #[serde(default)]
    pub reference_tag: Option<String>,
    #[serde(default)]
    pub upsample_structured: bool,
    /// Which naive prompt pool produced the naive data (metadata only).
    #[serde(default)]
    pub naive_pool: Option<String>,
    /// Share of the first epoch presented in difficulty order.
    #[serde(default = "one")]
    pub easiest_fraction: f64,
}

fn one() -> f64 {
    1.0
}

impl RecipeCard {
    pub fn preset(tag: &str) -> Result<Self, CurriculumError> {
        use Source::*;
        let (sources, curriculum, upsample, pool) = match tag {
            "v0.0" => (vec![Webis], false, false, None),
            "v0.1" => (vec![Webis, NaiveSynth], false, false, Some("single")),
            "v0.2" => (vec![Webis, NaiveSynth], false, false, Some("default")),
            "v0.3" => (vec![Webis, NaiveSynth, StructuredSynth], false, false, Some("default")),
            "v0.4" => (vec![Webis, NaiveSynth, StructuredSynth], true, false, Some("default")),
            "v0.5" => (vec![Webis, NaiveSynth, StructuredSynth], true, true, Some("default")),
            other => return Err(CurriculumError::UnknownRecipe(other.to_string())),
        };
        Ok(Self {
            tag: tag.to_string(),
            sources,
            curriculum,
            reference_tag: curriculum.then(|| "v0.1".to_string()),
            upsample_structured: upsample,
            naive_pool: pool.map(str::to_string),
            easiest_fraction: 1.0,
        })
    }

    pub fn load(path: &Path) -> Result<Self, CurriculumError> {
        let card: Self = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        card.validate()?;
        Ok(card)
    }

    pub fn save(&self, path: &Path) -> Result<(), CurriculumError> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn validate(&self) -> Result<(), CurriculumError> {
        if self.sources.is_empty() {
            return Err(CurriculumError::InvalidRecipe(format!("{} lists no sources", self.tag)));
        }
        if self.upsample_structured
            && !(self.sources.contains(&Source::NaiveSynth) && self.sources.contains(&Source::StructuredSynth))
        {
            return Err(CurriculumError::InvalidRecipe(format!(
                "{} upsamples structured data but does not use both synthetic sources",
                self.tag
            )));
        }
        if !(0.0..=1.0).contains(&self.easiest_fraction) {
            return Err(CurriculumError::InvalidRecipe(format!(
                "easiest_fraction {} outside [0, 1]",
                self.easiest_fraction
            )));
        }
        Ok(())
    }
}

/// Training data keyed by source.
pub type SourceData = HashMap<Source, Vec<LabeledExample>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainerConfig {
    pub kind: ModelKind,
    pub logreg: LogRegConfig,
    pub naive_bayes: NaiveBayesConfig,
    pub vocab: VocabConfig,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        Self {
            kind: ModelKind::Logreg,
            logreg: LogRegConfig::default(),
            naive_bayes: NaiveBayesConfig::default(),
            vocab: VocabConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tag: String,
    pub source_counts: BTreeMap<String, usize>,
    pub curriculum: bool,
    pub reference_tag: Option<String>,
    pub final_train_loss: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub naive_pool: Option<String>,
}

#[derive(Debug, Clone)]
pub struct RecipeOutcome {
    pub model: ClassifierModel,
    pub provenance: Provenance,
    /// Logistic-regression trace; `None` for naive Bayes.
    pub trace: Option<TrainingTrace>,
    /// Difficulty of each example in the order the first epoch consumed it.
    /// Empty without a curriculum.
    pub first_epoch_difficulties: Vec<f64>,
}

/// Assembles the recipe's training set and trains a classifier tagged with
/// the recipe.
pub fn run_recipe(
    card: &RecipeCard,
    data: &SourceData,
    config: &TrainerConfig,
    reference: Option<&ClassifierModel>,
) -> Result<RecipeOutcome, CurriculumError> {
    card.validate()?;
    let mut train: Vec<LabeledExample> = Vec::new();
    for &source in &card.sources {
        let examples = data
            .get(&source)
            .filter(|v| !v.is_empty())
            .ok_or(CurriculumError::MissingSource {
                recipe: card.tag.clone(),
                dataset: source.as_str(),
            })?;
        match source {
            Source::NaiveSynth if card.upsample_structured => {
                let structured = data
                    .get(&Source::StructuredSynth)
                    .filter(|v| !v.is_empty())
                    .ok_or(CurriculumError::MissingSource {
                        recipe: card.tag.clone(),
                        dataset: Source::StructuredSynth.as_str(),
                    })?;
                train.extend(balance_upsample(examples, structured)?);
            }
            Source::StructuredSynth if card.upsample_structured => {}
            _ => train.extend(examples.iter().cloned()),
        }
    }

    let reference = match (card.curriculum, reference) {
        (false, _) => None,
        (true, None) => return Err(CurriculumError::MissingReference(card.tag.clone())),
        (true, Some(r)) => {
            if let Some(expected) = &card.reference_tag {
                if &r.recipe_tag != expected {
                    log::warn!(
                        "recipe {} expects a {expected} reference, got {:?}",
                        card.tag,
                        r.recipe_tag
                    );
                }
            }
            Some(r)
        }
    };

    let mut source_counts = BTreeMap::new();
    for e in &train {
        *source_counts.entry(e.source.as_str().to_string()).or_insert(0) += 1;
    }

    let split = DatasetSplit::train_only(train);
    let (mut model, trace, first_epoch_difficulties) = match (config.kind, reference) {
        (ModelKind::NaiveBayes, Some(_)) => {
            return Err(CurriculumError::InvalidRecipe(
                "curriculum ordering needs an iteratively trained model".into(),
            ))
        }
        (ModelKind::NaiveBayes, None) => (
            train_naive_bayes(&split, &config.naive_bayes, &config.vocab)?,
            None,
            Vec::new(),
        ),
        (ModelKind::Logreg, None) => {
            let (m, t) = train_logreg_ordered(&split, &config.logreg, &config.vocab, &EpochOrder::Shuffled)?;
            (m, Some(t), Vec::new())
        }
        (ModelKind::Logreg, Some(r)) => {
            let scored = order_curriculum(&split.train, r);
            let mut difficulty = vec![0.0; scored.len()];
            for s in &scored {
                difficulty[s.index] = s.difficulty;
            }
            let order = EpochOrder::Curriculum {
                order: scored.iter().map(|s| s.index).collect(),
                easiest_fraction: card.easiest_fraction,
            };
            let (m, t) = train_logreg_ordered(&split, &config.logreg, &config.vocab, &order)?;
            let consumed = t.first_epoch_order.iter().map(|&i| difficulty[i]).collect();
            (m, Some(t), consumed)
        }
    };
    model.recipe_tag = card.tag.clone();

    let provenance = Provenance {
        tag: card.tag.clone(),
        source_counts,
        curriculum: card.curriculum,
        reference_tag: reference.map(|r| r.recipe_tag.clone()),
        final_train_loss: model.final_train_loss,
        naive_pool: card.naive_pool.clone(),
    };
    Ok(RecipeOutcome {
        model,
        provenance,
        trace,
        first_epoch_difficulties,
    })
}
