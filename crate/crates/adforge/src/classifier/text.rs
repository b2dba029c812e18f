//! Tokenization, vocabulary construction and TF-IDF featurization.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::ClassifierError;

/// Literal separator placed between query and response. It marks a boundary
/// and never contributes a term.
pub const SEPARATOR: &str = " [SEP] ";

/// The text a classifier sees for a (query, response) pair.
pub fn model_input(query: &str, response: &str) -> String {
    format!("{query}{SEPARATOR}{response}")
}

/// Lowercased alphanumeric runs. Separator markers are dropped.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(SEPARATOR)
        .flat_map(|part| part.split(|c: char| !c.is_alphanumeric()))
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct VocabularyRepr {
    terms: Vec<String>,
    doc_freq: Vec<u32>,
    n_docs: u32,
}

/// Lexicographically sorted terms with their document frequencies.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "VocabularyRepr", into = "VocabularyRepr")]
pub struct Vocabulary {
    terms: Vec<String>,
    doc_freq: Vec<u32>,
    n_docs: u32,
    index: HashMap<String, u32>,
}

impl PartialEq for Vocabulary {
    fn eq(&self, other: &Self) -> bool {
        self.terms == other.terms && self.doc_freq == other.doc_freq && self.n_docs == other.n_docs
    }
}

impl TryFrom<VocabularyRepr> for Vocabulary {
    type Error = String;

    fn try_from(r: VocabularyRepr) -> Result<Self, String> {
        if r.terms.len() != r.doc_freq.len() {
            return Err("terms and doc_freq differ in length".into());
        }
        if r.terms.windows(2).any(|w| w[0] >= w[1]) {
            return Err("terms must be sorted and unique".into());
        }
        if r.doc_freq.iter().any(|&df| df == 0 || df > r.n_docs) {
            return Err("doc_freq must lie in 1..=n_docs".into());
        }
        Ok(Self::from_parts(r.terms, r.doc_freq, r.n_docs))
    }
}

impl From<Vocabulary> for VocabularyRepr {
    fn from(v: Vocabulary) -> Self {
        Self {
            terms: v.terms,
            doc_freq: v.doc_freq,
            n_docs: v.n_docs,
        }
    }
}

impl Vocabulary {
    fn from_parts(terms: Vec<String>, doc_freq: Vec<u32>, n_docs: u32) -> Self {
        let index = terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        Self {
            terms,
            doc_freq,
            n_docs,
            index,
        }
    }

    /// Builds a vocabulary over `docs`. Terms seen in fewer than `min_df`
    /// documents are dropped; if more than `max_terms` remain, the most
    /// frequent are kept (ties broken lexicographically).
    pub fn from_documents<'a, I>(docs: I, min_df: u32, max_terms: usize) -> Result<Self, ClassifierError>
    where
        I: IntoIterator<Item = &'a str>,
    {
        if min_df < 1 || max_terms < 1 {
            return Err(ClassifierError::InvalidConfig(
                "min_df and max_terms must be at least 1".into(),
            ));
        }
        let mut df: HashMap<String, u32> = HashMap::new();
        let mut n_docs = 0u32;
        for doc in docs {
            n_docs += 1;
            let mut toks = tokenize(doc);
            toks.sort_unstable();
            toks.dedup();
            for t in toks {
                *df.entry(t).or_default() += 1;
            }
        }
        if n_docs == 0 {
            return Err(ClassifierError::EmptyCorpus);
        }
        let mut kept: Vec<(String, u32)> = df.into_iter().filter(|(_, c)| *c >= min_df).collect();
        if kept.len() > max_terms {
            kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
            kept.truncate(max_terms);
        }
        if kept.is_empty() {
            return Err(ClassifierError::EmptyVocabulary);
        }
        kept.sort_by(|a, b| a.0.cmp(&b.0));
        let (terms, doc_freq) = kept.into_iter().unzip();
        Ok(Self::from_parts(terms, doc_freq, n_docs))
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn doc_freq(&self) -> &[u32] {
        &self.doc_freq
    }

    pub fn n_docs(&self) -> u32 {
        self.n_docs
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn lookup(&self, term: &str) -> Option<u32> {
        self.index.get(term).copied()
    }

    pub fn idf(&self, idx: u32) -> f64 {
        (self.n_docs as f64 / self.doc_freq[idx as usize] as f64).ln()
    }

    /// Raw in-vocabulary term counts, sorted by index.
    pub fn term_counts(&self, text: &str) -> Vec<(u32, u32)> {
        let mut counts: BTreeMap<u32, u32> = BTreeMap::new();
        for tok in tokenize(text) {
            if let Some(i) = self.lookup(&tok) {
                *counts.entry(i).or_default() += 1;
            }
        }
        counts.into_iter().collect()
    }
}

/// Sparse vector over vocabulary indices.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FeatureVector {
    indices: Vec<u32>,
    values: Vec<f64>,
}

impl FeatureVector {
    /// Pairs must have strictly increasing indices.
    pub fn from_pairs(pairs: Vec<(u32, f64)>) -> Self {
        debug_assert!(pairs.windows(2).all(|w| w[0].0 < w[1].0));
        let (indices, values) = pairs.into_iter().unzip();
        Self { indices, values }
    }

    pub fn indices(&self) -> &[u32] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_zero(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices
            .iter()
            .zip(&self.values)
            .map(|(&i, &v)| (i as usize, v))
    }

    pub fn dot(&self, dense: &[f64]) -> f64 {
        self.iter().map(|(i, v)| dense[i] * v).sum()
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            indices: self.indices.clone(),
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }
}

/// TF-IDF vector with raw term counts and `ln(n_docs / df)` weights,
/// L2-normalized. Terms with zero weight are omitted, so text made only of
/// unknown or ubiquitous terms yields the zero vector.
pub fn featurize(text: &str, vocab: &Vocabulary) -> FeatureVector {
    let pairs: Vec<(u32, f64)> = vocab
        .term_counts(text)
        .into_iter()
        .map(|(i, tf)| (i, tf as f64 * vocab.idf(i)))
        .filter(|&(_, w)| w != 0.0)
        .collect();
    let norm = pairs.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
    if norm == 0.0 {
        return FeatureVector::default();
    }
    FeatureVector::from_pairs(pairs.into_iter().map(|(i, w)| (i, w / norm)).collect())
}
