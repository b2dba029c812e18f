//! Unconstrained ad insertion into ad-free answers.
//!
//! A prompt pool holds insertion prompts tagged by advertising strategy. The
//! first entry of the default pool is the published subtle-integration
//! prompt; the other eleven are locally written stand-ins (their names start
//! with `local-`) and can be replaced by loading a pool file.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::SynthError;
use crate::corpus::{Label, LabeledExample, Source};
use crate::generator::prompts::naive_insertion_template;
use crate::generator::{GenerationRequest, Generator, PromptTemplate};
use crate::util::{digest64, hex_id};

pub const STRATEGY_TAGS: [&str; 6] = ["direct", "indirect", "explicit", "implicit", "hard-sell", "soft-sell"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoolPrompt {
    pub name: String,
    pub tag: String,
    pub body: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptPool {
    prompts: Vec<PoolPrompt>,
    templates: Vec<PromptTemplate>,
}

const LOCAL_PROMPTS: [(&str, &str, &str); 11] = [
    (
        "local-direct-recommendation",
        "direct",
        "Rewrite the response below so that it openly recommends a product or service that fits the user's query. Invent a plausible product if needed and name it. Keep all original facts.\n\nSearch Query: {query}\nOriginal Response: {response}\nModified Response:",
    ),
    (
        "local-direct-comparison",
        "direct",
        "Add a short passage to the response that names one specific product relevant to the query and states plainly why it is a good choice. Do not remove any existing information.\n\nSearch Query: {query}\nOriginal Response: {response}\nModified Response:",
    ),
    (
        "local-indirect-anecdote",
        "indirect",
        "Weave a product into the response through a brief anecdote about someone who used it in a situation like the user's. The product should never be recommended outright. Return only the rewritten response.\n\nSearch Query: {query}\nOriginal Response: {response}\nModified Response:",
    ),
    (
        "local-indirect-context",
        "indirect",
        "Mention a relevant product as background context, for example as the tool commonly used by experts in this area, without urging the reader to buy it. Return only the rewritten response.\n\nSearch Query: {query}\nOriginal Response: {response}\nModified Response:",
    ),
    (
        "local-explicit-sponsor",
        "explicit",
        "Insert a clearly promotional sentence about a product that suits the query, including its brand name and its main selling point. Keep the rest of the response unchanged.\n\nSearch Query: {query}\nOriginal Response: {response}\nModified Response:",
    ),
    (
        "local-explicit-feature-list",
        "explicit",
        "Extend the response with a product suggestion that lists two or three concrete features of that product and explains how each helps the user. Return only the modified response.\n\nSearch Query: {query}\nOriginal Response: {response}\nModified Response:",
    ),
    (
        "local-implicit-association",
        "implicit",
        "Associate a product with the positive outcome described in the response so the reader links the two, without stating that the product is being promoted. Keep the tone informational.\n\nSearch Query: {query}\nOriginal Response: {response}\nModified Response:",
    ),
    (
        "local-hard-sell-urgency",
        "hard-sell",
        "Rewrite the response so that it pushes a specific product relevant to the query, stressing a limited-time offer and a strong reason to act now. Preserve the original facts.\n\nSearch Query: {query}\nOriginal Response: {response}\nModified Response:",
    ),
    (
        "local-hard-sell-superlative",
        "hard-sell",
        "Add a persuasive claim that a named product is the best available option for the user's need, backed by a confident statement about its quality. Return only the modified response.\n\nSearch Query: {query}\nOriginal Response: {response}\nModified Response:",
    ),
    (
        "local-soft-sell-mood",
        "soft-sell",
        "Introduce a product through the feeling or lifestyle it evokes rather than its specifications. The mention should be gentle and brief. Return only the modified response.\n\nSearch Query: {query}\nOriginal Response: {response}\nModified Response:",
    ),
    (
        "local-soft-sell-helpful-tip",
        "soft-sell",
        "Phrase a product mention as a friendly tip that might make the task in the query easier, keeping the wording modest and helpful. Return only the modified response.\n\nSearch Query: {query}\nOriginal Response: {response}\nModified Response:",
    ),
];

impl PromptPool {
    pub fn new(prompts: Vec<PoolPrompt>) -> Result<Self, SynthError> {
        if prompts.is_empty() {
            return Err(SynthError::InvalidPool("pool is empty".into()));
        }
        let mut templates = Vec::with_capacity(prompts.len());
        for p in &prompts {
            if !STRATEGY_TAGS.contains(&p.tag.as_str()) {
                return Err(SynthError::InvalidPool(format!(
                    "prompt {:?} has unknown strategy tag {:?}",
                    p.name, p.tag
                )));
            }
            let t = PromptTemplate::new(p.name.clone(), p.body.clone());
            let required = t.required_placeholders();
            if !required.contains("response") || required.iter().any(|r| r != "query" && r != "response") {
                return Err(SynthError::InvalidPool(format!(
                    "prompt {:?} must use {{response}} and may only use {{query}} besides",
                    p.name
                )));
            }
            templates.push(t);
        }
        Ok(Self { prompts, templates })
    }

    /// The published prompt followed by eleven local stand-ins.
    pub fn default_pool() -> Self {
        let mut prompts = vec![Self::published_prompt()];
        prompts.extend(LOCAL_PROMPTS.iter().map(|(name, tag, body)| PoolPrompt {
            name: name.to_string(),
            tag: tag.to_string(),
            body: body.to_string(),
        }));
        Self::new(prompts).expect("built-in pool is valid")
    }

    /// Only the published prompt.
    pub fn single_prompt_pool() -> Self {
        Self::new(vec![Self::published_prompt()]).expect("built-in pool is valid")
    }

    fn published_prompt() -> PoolPrompt {
        let t = naive_insertion_template();
        PoolPrompt {
            name: t.name().to_string(),
            tag: "implicit".into(),
            body: t.body().to_string(),
        }
    }

    /// Reads a JSON list of `{name, tag, body}` objects.
    pub fn load(path: &Path) -> Result<Self, SynthError> {
        let raw = std::fs::read_to_string(path)?;
        let prompts: Vec<PoolPrompt> =
            serde_json::from_str(&raw).map_err(|e| SynthError::InvalidPool(format!("{}: {e}", path.display())))?;
        Self::new(prompts)
    }

    pub fn save(&self, path: &Path) -> Result<(), SynthError> {
        let json = serde_json::to_string_pretty(&self.prompts).map_err(std::io::Error::from)?;
        std::fs::write(path, json)?;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.prompts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prompts.is_empty()
    }

    pub fn prompts(&self) -> &[PoolPrompt] {
        &self.prompts
    }

    pub fn template(&self, index: usize) -> Option<&PromptTemplate> {
        self.templates.get(index)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PromptChoice {
    Index(usize),
    /// Draw an index from the seeded generator of the call.
    Seeded,
}

/// A synthetic ad-bearing response with the prompt that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaiveInsertion {
    #[serde(flatten)]
    pub example: LabeledExample,
    pub prompt_index: usize,
    pub prompt_name: String,
    pub prompt_tag: String,
}

pub fn choose_prompt_index(pool: &PromptPool, query: &str, response: &str, seed: u64) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ digest64(&[query.as_bytes(), response.as_bytes()]));
    rng.gen_range(0..pool.len())
}

/// Asks `gen` to slip an ad into `response` and labels the result as an ad.
pub fn insert_ad_naive<G: Generator + ?Sized>(
    query: &str,
    response: &str,
    pool: &PromptPool,
    choice: PromptChoice,
    gen: &G,
    temperature: f64,
    seed: u64,
) -> Result<NaiveInsertion, SynthError> {
    let index = match choice {
        PromptChoice::Index(i) if i < pool.len() => i,
        PromptChoice::Index(i) => {
            return Err(SynthError::InvalidPool(format!(
                "prompt index {i} out of range for a pool of {}",
                pool.len()
            )))
        }
        PromptChoice::Seeded => choose_prompt_index(pool, query, response, seed),
    };
    let template = pool.template(index).expect("index checked");
    let prompt = template.render(&[("query", query), ("response", response)])?;
    let request = GenerationRequest::new(prompt, temperature, 1).with_seed(seed);
    let completion = gen
        .generate(&request)?
        .into_iter()
        .next()
        .map(|c| c.text)
        .unwrap_or_default();
    if completion.trim().is_empty() {
        return Err(SynthError::EmptyCompletion);
    }
    let meta = &pool.prompts()[index];
    let id = format!(
        "naive-{}",
        hex_id(&[query.as_bytes(), response.as_bytes(), &(index as u64).to_le_bytes(), &seed.to_le_bytes()])
    );
    Ok(NaiveInsertion {
        example: LabeledExample::new(id, query, completion, Label::Ad, Source::NaiveSynth),
        prompt_index: index,
        prompt_name: meta.name.clone(),
        prompt_tag: meta.tag.clone(),
    })
}
