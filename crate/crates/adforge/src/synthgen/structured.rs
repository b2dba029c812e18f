//! Entity summaries and hard positive/negative text pairs.

use serde::{Deserialize, Serialize};

use super::entities::{filter_entities, EntityRecord};
use super::SynthError;
use crate::corpus::{Label, LabeledExample, Source};
use crate::generator::prompts::{hard_negative_template, hard_positive_template, summarize_template};
use crate::generator::{GenerationRequest, Generator};
use crate::util::{bounded_map, digest64, hex_id};

pub const MAX_SUMMARY_WORDS: usize = 200;
pub const MIN_FEATURES: usize = 3;
pub const MAX_FEATURES: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthPair {
    pub hard_positive: LabeledExample,
    pub hard_negative: LabeledExample,
    pub entity: EntityRecord,
}

impl SynthPair {
    pub fn examples(&self) -> [&LabeledExample; 2] {
        [&self.hard_positive, &self.hard_negative]
    }
}

fn complete<G: Generator + ?Sized>(gen: &G, prompt: &str, temperature: f64, seed: u64) -> Result<String, SynthError> {
    let request = GenerationRequest::new(prompt, temperature, 1).with_seed(seed);
    Ok(gen
        .generate(&request)?
        .into_iter()
        .next()
        .map(|c| c.text)
        .unwrap_or_default())
}

fn truncate_words(text: &str, max: usize) -> String {
    text.split_whitespace().take(max).collect::<Vec<_>>().join(" ")
}

/// Parses a `SUMMARY:` / `FEATURES:` reply. Returns `None` unless a summary
/// and at least three features are present; extra features past ten are
/// dropped.
pub fn parse_summary_reply(reply: &str) -> Option<(String, Vec<String>)> {
    let mut summary_lines = Vec::new();
    let mut features = Vec::new();
    let mut section = 0u8;
    for line in reply.lines() {
        let t = line.trim();
        if let Some(rest) = t.strip_prefix("SUMMARY:") {
            section = 1;
            summary_lines.push(rest.trim().to_string());
        } else if t.starts_with("FEATURES:") {
            section = 2;
        } else if section == 1 && !t.is_empty() {
            summary_lines.push(t.to_string());
        } else if section == 2 {
            let item = t
                .strip_prefix("- ")
                .or_else(|| t.strip_prefix("* "))
                .or_else(|| t.split_once(". ").filter(|(n, _)| n.parse::<u32>().is_ok()).map(|(_, r)| r));
            if let Some(f) = item.map(str::trim).filter(|f| !f.is_empty()) {
                features.push(f.to_string());
            }
        }
    }
    let summary = truncate_words(&summary_lines.join(" "), MAX_SUMMARY_WORDS);
    if summary.is_empty() || features.len() < MIN_FEATURES {
        return None;
    }
    features.truncate(MAX_FEATURES);
    Some((summary, features))
}

/// Fills `summary` and `key_features` from one structured generation,
/// retrying once on an unparseable reply.
pub fn summarize_and_extract<G: Generator + ?Sized>(
    entity: &EntityRecord,
    gen: &G,
    temperature: f64,
    seed: u64,
) -> Result<EntityRecord, SynthError> {
    if entity.raw_text.trim().is_empty() {
        return Err(SynthError::MissingText(entity.product_name.clone()));
    }
    let prompt = summarize_template().render(&[
        ("infobox_name", &entity.infobox),
        ("page_title", &entity.page_title),
        ("product_name", &entity.product_name),
        ("raw_text", &entity.raw_text),
    ])?;
    for attempt in 0..2u64 {
        let reply = complete(gen, &prompt, temperature, seed.wrapping_add(attempt))?;
        if let Some((summary, key_features)) = parse_summary_reply(&reply) {
            return Ok(EntityRecord {
                summary,
                key_features,
                ..entity.clone()
            });
        }
        log::debug!("unparseable summary for {:?} on attempt {}", entity.product_name, attempt + 1);
    }
    Err(SynthError::ParseError {
        product: entity.product_name.clone(),
    })
}

fn mentions(text: &str, product: &str) -> bool {
    text.to_lowercase().contains(&product.to_lowercase())
}

fn generate_mentioning<G: Generator + ?Sized>(
    prompt: &str,
    product: &str,
    which: &'static str,
    gen: &G,
    temperature: f64,
    seed: u64,
) -> Result<String, SynthError> {
    for attempt in 0..2u64 {
        let text = complete(gen, prompt, temperature, seed.wrapping_add(attempt))?;
        if mentions(&text, product) {
            return Ok(text);
        }
    }
    Err(SynthError::MissingMention {
        product: product.to_string(),
        which,
    })
}

pub fn hard_positive_prompt(entity: &EntityRecord) -> Result<String, SynthError> {
    let features = entity.key_features.join(", ");
    Ok(hard_positive_template().render(&[
        ("infobox_name", &entity.infobox),
        ("product_name", &entity.product_name),
        ("page_title", &entity.page_title),
        ("summary", &entity.summary),
        ("key_features", &features),
    ])?)
}

pub fn hard_negative_prompt(entity: &EntityRecord) -> Result<String, SynthError> {
    Ok(hard_negative_template().render(&[
        ("infobox_name", &entity.infobox),
        ("product_name", &entity.product_name),
        ("page_title", &entity.page_title),
        ("summary", &entity.summary),
    ])?)
}

/// Generates a promotional and a factual text about a summarized entity.
/// Each completion must name the product; a miss is retried once.
pub fn gen_structured_pair<G: Generator + ?Sized>(
    entity: &EntityRecord,
    gen: &G,
    temperature: f64,
    seed: u64,
) -> Result<SynthPair, SynthError> {
    if entity.summary.is_empty() || entity.key_features.is_empty() {
        return Err(SynthError::ParseError {
            product: entity.product_name.clone(),
        });
    }
    let name = &entity.product_name;
    let positive = generate_mentioning(&hard_positive_prompt(entity)?, name, "hard positive", gen, temperature, seed)?;
    let negative = generate_mentioning(
        &hard_negative_prompt(entity)?,
        name,
        "hard negative",
        gen,
        temperature,
        seed.wrapping_add(1 << 32),
    )?;
    let key = hex_id(&[entity.page_title.as_bytes(), name.as_bytes(), &seed.to_le_bytes()]);
    Ok(SynthPair {
        hard_positive: LabeledExample::new(
            format!("structured-{key}-pos"),
            name.as_str(),
            positive,
            Label::Ad,
            Source::StructuredSynth,
        ),
        hard_negative: LabeledExample::new(
            format!("structured-{key}-neg"),
            name.as_str(),
            negative,
            Label::NoAd,
            Source::StructuredSynth,
        ),
        entity: entity.clone(),
    })
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct StructuredRun {
    /// Filtered entities with summaries, in recency order.
    pub entities: Vec<EntityRecord>,
    pub pairs: Vec<SynthPair>,
    /// Entities dropped after a generation or validation failure.
    pub failures: Vec<(String, String)>,
}

impl StructuredRun {
    /// Positives and negatives interleaved, pair by pair.
    pub fn examples(&self) -> Vec<LabeledExample> {
        self.pairs
            .iter()
            .flat_map(|p| [p.hard_positive.clone(), p.hard_negative.clone()])
            .collect()
    }
}

/// Filters harvested entities, then summarizes each and generates its pair,
/// with at most `max_in_flight` entities processed at once. Entity seeds are
/// derived from `seed` and the page title, so output does not depend on
/// scheduling.
pub fn run_structured<G: Generator + ?Sized>(
    harvested: &[EntityRecord],
    gen: &G,
    temperature: f64,
    seed: u64,
    max_in_flight: usize,
) -> StructuredRun {
    let kept = filter_entities(harvested);
    let results = bounded_map(&kept, max_in_flight, |_, entity| {
        let entity_seed = seed ^ digest64(&[entity.page_title.as_bytes()]);
        let summarized = summarize_and_extract(entity, gen, temperature, entity_seed)?;
        let pair = gen_structured_pair(&summarized, gen, temperature, entity_seed)?;
        Ok::<_, SynthError>((summarized, pair))
    });
    let mut run = StructuredRun::default();
    for (entity, result) in kept.iter().zip(results) {
        match result {
            Ok((summarized, pair)) => {
                run.entities.push(summarized);
                run.pairs.push(pair);
            }
            Err(e) => {
                log::warn!("dropping entity {:?}: {e}", entity.product_name);
                run.failures.push((entity.product_name.clone(), e.to_string()));
            }
        }
    }
    run
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::{ScriptedGenerator, StubGenerator};

    fn camera() -> EntityRecord {
        EntityRecord {
            product_name: "Lumix GH5".into(),
            infobox: "camera".into(),
            page_title: "Panasonic Lumix DC-GH5".into(),
            summary: String::new(),
            key_features: vec![],
            release_year: 2017,
            matched_properties: vec!["P176".into()],
            raw_text: "The Lumix GH5 is a mirrorless camera.".into(),
        }
    }

    fn summarized() -> EntityRecord {
        EntityRecord {
            summary: "A mirrorless camera.".into(),
            key_features: vec!["4K video".into(), "weather sealing".into(), "IBIS".into()],
            ..camera()
        }
    }

    #[test]
    fn well_formed_reply_parsed() {
        let g = ScriptedGenerator::new([
            "SUMMARY: A mirrorless camera\nwith video focus.\nFEATURES:\n- 4K video\n- weather sealing\n- IBIS",
        ]);
        let e = summarize_and_extract(&camera(), &g, 1.0, 0).unwrap();
        assert_eq!(e.summary, "A mirrorless camera with video focus.");
        assert_eq!(e.key_features, vec!["4K video", "weather sealing", "IBIS"]);
    }

    #[test]
    fn prose_twice_is_parse_error() {
        let g = ScriptedGenerator::new(["Just prose.", "More prose."]);
        assert!(matches!(
            summarize_and_extract(&camera(), &g, 1.0, 0),
            Err(SynthError::ParseError { .. })
        ));
        assert_eq!(g.calls(), 2);
    }

    #[test]
    fn retry_recovers() {
        let g = ScriptedGenerator::new(["nope", "SUMMARY: ok\nFEATURES:\n* a\n* b\n1. c"]);
        let e = summarize_and_extract(&camera(), &g, 1.0, 0).unwrap();
        assert_eq!(e.key_features, vec!["a", "b", "c"]);
    }

    #[test]
    fn long_summary_truncated() {
        let long: Vec<String> = (0..250).map(|i| format!("w{i}")).collect();
        let reply = format!("SUMMARY: {}\nFEATURES:\n- a\n- b\n- c", long.join(" "));
        let g = ScriptedGenerator::new([reply]);
        let e = summarize_and_extract(&camera(), &g, 1.0, 0).unwrap();
        assert_eq!(e.summary.split_whitespace().count(), 200);
        assert!(e.summary.ends_with("w199"));
    }

    #[test]
    fn feature_bounds() {
        assert!(parse_summary_reply("SUMMARY: s\nFEATURES:\n- a\n- b").is_none());
        let many: String = (0..12).map(|i| format!("- f{i}\n")).collect();
        let (_, f) = parse_summary_reply(&format!("SUMMARY: s\nFEATURES:\n{many}")).unwrap();
        assert_eq!(f.len(), 10);
    }

    #[test]
    fn pair_with_stub() {
        let pair = gen_structured_pair(&summarized(), &StubGenerator, 1.0, 3).unwrap();
        assert_eq!(pair.hard_positive.label, Label::Ad);
        assert_eq!(pair.hard_negative.label, Label::NoAd);
        for ex in pair.examples() {
            assert!(ex.response.contains("Lumix GH5"));
            assert_eq!(ex.source, Source::StructuredSynth);
        }
        assert!(pair.hard_positive.id.ends_with("-pos"));
    }

    #[test]
    fn missing_mention_after_retry() {
        let g = ScriptedGenerator::new(["a camera", "still a camera"]);
        assert!(matches!(
            gen_structured_pair(&summarized(), &g, 1.0, 0),
            Err(SynthError::MissingMention { which: "hard positive", .. })
        ));
    }

    #[test]
    fn hard_positive_render_binds_entity() {
        let p = hard_positive_prompt(&summarized()).unwrap();
        assert!(p.contains("must include the camera name, Lumix GH5."));
        assert!(p.contains("aspects of Panasonic Lumix DC-GH5: 4K video, weather sealing, IBIS"));
        assert!(!p.contains('{'));
    }

    #[test]
    fn run_is_deterministic_and_filters() {
        let mut old = camera();
        old.product_name = "Old Cam".into();
        old.page_title = "Old Cam".into();
        old.release_year = 1998;
        let input = vec![camera(), old];
        let a = run_structured(&input, &StubGenerator, 1.0, 9, 4);
        let b = run_structured(&input, &StubGenerator, 1.0, 9, 1);
        assert_eq!(a, b);
        assert_eq!(a.pairs.len(), 1);
        assert_eq!(a.entities[0].product_name, "Lumix GH5");
        assert!(a.failures.is_empty());
    }
}
