//! Offline generation backends.

use std::collections::VecDeque;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::prompts::STRUCTURED_REPLY_MARKER;
use super::{Candidate, GenError, GenerationRequest, Generator};
use crate::util::digest64;

/// Suffix vocabulary. Half of it reads as promotional, half as neutral, so
/// candidate sets carry real variation for a classifier to rank.
pub const STUB_WORDS: &[&str] = &[
    "exclusive", "premium", "offer", "discount", "trusted", "limited", "deal", "brand",
    "upgrade", "sale", "guaranteed", "favorite", "recommended", "bestselling", "save", "shop",
    "typically", "measured", "research", "practice", "weather", "history", "distance", "routine",
    "season", "method", "average", "depends", "several", "factors", "usually", "common",
];

const QUERY_PREFIXES: &[&str] = &["Query:", "Original query:", "Search Query:"];

/// The value of the prompt's query line, or its first non-empty line.
pub fn query_line(prompt: &str) -> String {
    for line in prompt.lines() {
        let t = line.trim();
        for prefix in QUERY_PREFIXES {
            if let Some(rest) = t.strip_prefix(prefix) {
                return rest.trim().trim_end_matches('.').to_string();
            }
        }
    }
    prompt
        .lines()
        .map(str::trim)
        .find(|l| !l.is_empty())
        .unwrap_or_default()
        .to_string()
}

/// Deterministic test double. Each candidate is the prompt's query line
/// followed by seeded words from [`STUB_WORDS`]. At temperature 0 the output
/// depends on the prompt alone, so all candidates coincide.
///
/// Prompts that ask for the structured summary format get a reply in that
/// format.
#[derive(Debug, Clone, Copy, Default)]
pub struct StubGenerator;

impl StubGenerator {
    fn rng_for(request: &GenerationRequest, seed: u64, index: usize) -> ChaCha8Rng {
        let key = if request.temperature == 0.0 {
            digest64(&[request.prompt.as_bytes()])
        } else {
            digest64(&[
                request.prompt.as_bytes(),
                &seed.to_le_bytes(),
                &(index as u64).to_le_bytes(),
            ])
        };
        ChaCha8Rng::seed_from_u64(key)
    }

    fn words(rng: &mut ChaCha8Rng, count: usize) -> String {
        (0..count)
            .map(|_| *STUB_WORDS.choose(rng).expect("word list is non-empty"))
            .collect::<Vec<_>>()
            .join(" ")
    }

    fn text(request: &GenerationRequest, seed: u64, index: usize) -> String {
        let mut rng = Self::rng_for(request, seed, index);
        let head = query_line(&request.prompt);
        if request.prompt.contains(STRUCTURED_REPLY_MARKER) {
            let summary = Self::words(&mut rng, 12);
            let n_features = rng.gen_range(3..=5);
            let features: Vec<String> = (0..n_features)
                .map(|_| format!("- {}", Self::words(&mut rng, 2)))
                .collect();
            return format!("SUMMARY: {head} {summary}\nFEATURES:\n{}", features.join("\n"));
        }
        let count = rng.gen_range(6..=14);
        format!("{head} {}", Self::words(&mut rng, count))
    }
}

impl Generator for StubGenerator {
    fn generate(&self, request: &GenerationRequest) -> Result<Vec<Candidate>, GenError> {
        request.validate()?;
        let seed = request.seed.ok_or(GenError::MissingSeed)?;
        Ok((0..request.n)
            .map(|i| Candidate::new(i, Self::text(request, seed, i), "stop"))
            .collect())
    }

    fn name(&self) -> &str {
        "stub"
    }
}

/// Replays queued replies, one per requested candidate, and counts calls.
#[derive(Debug, Default)]
pub struct ScriptedGenerator {
    replies: Mutex<VecDeque<String>>,
    calls: AtomicUsize,
}

impl ScriptedGenerator {
    pub fn new<I, S>(replies: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            replies: Mutex::new(replies.into_iter().map(Into::into).collect()),
            calls: AtomicUsize::new(0),
        }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn remaining(&self) -> usize {
        self.replies.lock().expect("poisoned").len()
    }
}

impl Generator for ScriptedGenerator {
    fn generate(&self, request: &GenerationRequest) -> Result<Vec<Candidate>, GenError> {
        request.validate()?;
        self.calls.fetch_add(1, Ordering::SeqCst);
        let mut q = self.replies.lock().expect("poisoned");
        (0..request.n)
            .map(|i| {
                q.pop_front()
                    .map(|text| Candidate::new(i, text, "stop"))
                    .ok_or_else(|| GenError::Protocol("scripted replies exhausted".into()))
            })
            .collect()
    }

    fn name(&self) -> &str {
        "scripted"
    }
}
