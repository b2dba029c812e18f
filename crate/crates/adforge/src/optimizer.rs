//! Classifier-guided selection of rewritten responses.
//!
//! Given N candidate rewrites and a scorer, the selected response is the
//! candidate with the lowest ad probability, ties going to the lowest index.
//! The same selection drives best-of-N rewriting at inference time and the
//! construction of (prompt, completion) pairs for fine-tuning a rewriter.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classifier::{ClassifierError, Scorer};
use crate::corpus::{write_jsonl, AdItem, CorpusError};
use crate::generator::{build_rewrite_prompt, Candidate, GenError, GenerationRequest, Generator, DEFAULT_MAX_TOKENS};

#[derive(Debug, Error)]
pub enum OptimizeError {
    #[error("no candidates to select from")]
    EmptyCandidates,
    #[error("candidate {index} scored {value}, outside [0, 1]")]
    ScoreOutOfRange { index: usize, value: f64 },
    #[error("record {record}: {reason}")]
    InvariantViolation { record: usize, reason: String },
    #[error("invalid setting: {0}")]
    InvalidSetting(String),
    #[error(transparent)]
    Generator(#[from] GenError),
    #[error(transparent)]
    Scorer(#[from] ClassifierError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

/// Index of the smallest score, lowest index on ties. `None` when empty.
pub fn argmin_first(scores: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &s) in scores.iter().enumerate() {
        match best {
            Some(b) if s >= scores[b] => {}
            _ => best = Some(i),
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub scores: Vec<f64>,
    pub chosen_index: usize,
}

/// Scores every candidate with `scorer` and picks the least ad-like one.
pub fn select_best<S: Scorer + ?Sized>(
    query: &str,
    candidates: &[Candidate],
    scorer: &S,
) -> Result<Selection, OptimizeError> {
    if candidates.is_empty() {
        return Err(OptimizeError::EmptyCandidates);
    }
    let scores = candidates
        .iter()
        .enumerate()
        .map(|(index, c)| {
            let value = scorer.score(query, &c.text)?;
            if !(0.0..=1.0).contains(&value) {
                return Err(OptimizeError::ScoreOutOfRange { index, value });
            }
            Ok(value)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let chosen_index = argmin_first(&scores).expect("non-empty");
    Ok(Selection {
        scores,
        chosen_index,
    })
}

/// A scored set of rewrites for one (query, response, item) triple.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateSet {
    pub query: String,
    pub base_response: String,
    pub item: AdItem,
    pub candidates: Vec<Candidate>,
    pub scores: Vec<f64>,
    pub chosen_index: usize,
}

impl CandidateSet {
    pub fn chosen(&self) -> &Candidate {
        &self.candidates[self.chosen_index]
    }

    pub fn chosen_score(&self) -> f64 {
        self.scores[self.chosen_index]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewriteSettings {
    pub n: usize,
    pub temperature: f64,
    pub max_tokens: u32,
    pub seed: u64,
}

impl Default for RewriteSettings {
    fn default() -> Self {
        Self {
            n: 10,
            temperature: 1.0,
            max_tokens: DEFAULT_MAX_TOKENS,
            seed: 0,
        }
    }
}

/// Best-of-N rewriting. With `n = 1` this is plain zero-shot rewriting.
pub fn rewrite_best_of_n<G, S>(
    query: &str,
    base_response: &str,
    item: &AdItem,
    gen: &G,
    scorer: &S,
    settings: &RewriteSettings,
) -> Result<CandidateSet, OptimizeError>
where
    G: Generator + ?Sized,
    S: Scorer + ?Sized,
{
    if settings.n == 0 {
        return Err(OptimizeError::InvalidSetting("n must be at least 1".into()));
    }
    let prompt = build_rewrite_prompt(query, base_response, item)?;
    let mut request = GenerationRequest::new(prompt, settings.temperature, settings.n).with_seed(settings.seed);
    request.max_tokens = settings.max_tokens;
    let candidates = gen.generate(&request)?;
    let selection = select_best(query, &candidates, scorer)?;
    Ok(CandidateSet {
        query: query.to_string(),
        base_response: base_response.to_string(),
        item: item.clone(),
        candidates,
        scores: selection.scores,
        chosen_index: selection.chosen_index,
    })
}

/// Zero-shot rewriting: a single sample, no classifier in the loop.
pub fn rewrite_zero_shot<G: Generator + ?Sized>(
    query: &str,
    base_response: &str,
    item: &AdItem,
    gen: &G,
    temperature: f64,
    seed: u64,
) -> Result<Candidate, OptimizeError> {
    let prompt = build_rewrite_prompt(query, base_response, item)?;
    let request = GenerationRequest::new(prompt, temperature, 1).with_seed(seed);
    let mut out = gen.generate(&request)?;
    out.pop().ok_or(OptimizeError::EmptyCandidates)
}

/// One fine-tuning example: the rewrite prompt and its least detectable
/// completion, with the full scored candidate set kept for auditing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SftRecord {
    pub prompt: String,
    pub completion: String,
    pub candidates: Vec<String>,
    pub scores: Vec<f64>,
    pub chosen_index: usize,
}

impl SftRecord {
    pub fn validate(&self) -> Result<(), String> {
        if self.candidates.is_empty() {
            return Err("no candidates".into());
        }
        if self.scores.len() != self.candidates.len() {
            return Err(format!(
                "{} scores for {} candidates",
                self.scores.len(),
                self.candidates.len()
            ));
        }
        let Some(chosen) = self.candidates.get(self.chosen_index) else {
            return Err(format!("chosen_index {} out of range", self.chosen_index));
        };
        if *chosen != self.completion {
            return Err("completion differs from candidates[chosen_index]".into());
        }
        let min = self.scores.iter().copied().fold(f64::INFINITY, f64::min);
        if self.scores[self.chosen_index] != min {
            return Err("chosen score is not the minimum".into());
        }
        Ok(())
    }
}

/// A generation backend paired with the temperature it samples at.
pub type Backend<'a> = (&'a dyn Generator, f64);

/// Samples `m` rewrites, cycling through `backends`, and keeps the lowest
/// scoring one as the completion.
#[allow(clippy::too_many_arguments)]
pub fn build_sft_record<S: Scorer + ?Sized>(
    query: &str,
    base_response: &str,
    item: &AdItem,
    backends: &[Backend<'_>],
    scorer: &S,
    m: usize,
    seed: u64,
) -> Result<SftRecord, OptimizeError> {
    if m < 2 {
        return Err(OptimizeError::InvalidSetting("m must be at least 2".into()));
    }
    if backends.is_empty() {
        return Err(OptimizeError::InvalidSetting("no generation backend".into()));
    }
    let prompt = build_rewrite_prompt(query, base_response, item)?;

    // Sample slot i belongs to backend i % len; each backend is asked once
    // for all of its slots.
    let mut slots: Vec<Option<Candidate>> = vec![None; m];
    for (b, (gen, temperature)) in backends.iter().enumerate() {
        let mine: Vec<usize> = (b..m).step_by(backends.len()).collect();
        if mine.is_empty() {
            continue;
        }
        let request = GenerationRequest::new(prompt.clone(), *temperature, mine.len())
            .with_seed(seed.wrapping_add(b as u64));
        let out = gen.generate(&request)?;
        if out.len() != mine.len() {
            return Err(GenError::Protocol(format!(
                "backend {} returned {} of {} candidates",
                gen.name(),
                out.len(),
                mine.len()
            ))
            .into());
        }
        for (slot, c) in mine.into_iter().zip(out) {
            slots[slot] = Some(c);
        }
    }
    let candidates: Vec<Candidate> = slots
        .into_iter()
        .enumerate()
        .map(|(i, c)| {
            let mut c = c.expect("every slot is assigned");
            c.index = i;
            c
        })
        .collect();
    let selection = select_best(query, &candidates, scorer)?;
    Ok(SftRecord {
        prompt,
        completion: candidates[selection.chosen_index].text.clone(),
        candidates: candidates.into_iter().map(|c| c.text).collect(),
        scores: selection.scores,
        chosen_index: selection.chosen_index,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SftLine {
    pub prompt: String,
    pub completion: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SftAuditLine {
    pub prompt: String,
    pub candidates: Vec<String>,
    pub scores: Vec<f64>,
    pub chosen_index: usize,
}

/// `sft.jsonl` -> `sft.audit.jsonl`.
pub fn audit_path(path: &Path) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "sft".into());
    path.with_file_name(format!("{stem}.audit.jsonl"))
}

/// Writes the training pairs to `path` and the candidate sets to the audit
/// sidecar. Nothing is written if any record breaks its invariants.
pub fn emit_sft_dataset(records: &[SftRecord], path: &Path) -> Result<usize, OptimizeError> {
    for (i, r) in records.iter().enumerate() {
        r.validate()
            .map_err(|reason| OptimizeError::InvariantViolation { record: i, reason })?;
    }
    let lines: Vec<SftLine> = records
        .iter()
        .map(|r| SftLine {
            prompt: r.prompt.clone(),
            completion: r.completion.clone(),
        })
        .collect();
    let audit: Vec<SftAuditLine> = records
        .iter()
        .map(|r| SftAuditLine {
            prompt: r.prompt.clone(),
            candidates: r.candidates.clone(),
            scores: r.scores.clone(),
            chosen_index: r.chosen_index,
        })
        .collect();
    let n = write_jsonl(&lines, path)?;
    write_jsonl(&audit, &audit_path(path))?;
    Ok(n)
}
