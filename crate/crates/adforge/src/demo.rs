//! Small deterministic corpora for the examples, the CLI walkthrough and
//! tests. Ad-bearing texts draw on promotional vocabulary and ad-free texts
//! on neutral vocabulary, with some overlap so classifiers have work to do.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{AdItem, Label, LabeledExample, Passage, QueryTask, Source};
use crate::curriculum::SourceData;
use crate::generator::stub::STUB_WORDS;
use crate::synthgen::RawPage;

const SUBJECTS: &[&str] = &[
    "trail running shoes",
    "espresso at home",
    "a used hatchback",
    "learning the violin",
    "indoor herb gardens",
    "winter camping",
    "a budget laptop",
    "sourdough starter",
    "noise cancelling headphones",
    "a first telescope",
    "home office lighting",
    "marathon training",
    "a cast iron pan",
    "beginner photography",
    "a standing desk",
    "bike commuting",
];

const QUESTIONS: &[&str] = &["how to choose", "tips for", "what to know about", "best way to start with"];

const ITEMS: &[(&str, &str, &str)] = &[
    ("StrideLite 3", "shoe", "lightweight, breathable"),
    ("BrewMate Duo", "espresso machine", "compact, fast heat-up"),
    ("Velora Hatch", "car", "fuel efficient, roomy"),
    ("Aria Student Violin", "instrument", "warm tone, durable"),
    ("LeafBox Mini", "planter", "self-watering, quiet"),
    ("Northpeak Bivy", "tent", "waterproof, packable"),
    ("Cobalt Air 14", "laptop", "long battery life, light"),
    ("RiseRight Jar", "kitchen jar", "airtight, easy to clean"),
];

const FILLER: &[&str] = &[
    "the", "most", "people", "find", "that", "it", "helps", "to", "compare", "options", "before", "deciding", "and",
    "consider", "what", "matters", "for", "your", "situation",
];

fn promotional() -> &'static [&'static str] {
    &STUB_WORDS[..16]
}

fn neutral() -> &'static [&'static str] {
    &STUB_WORDS[16..]
}

fn sentence(rng: &mut ChaCha8Rng, pool: &[&str], words: usize) -> String {
    (0..words)
        .map(|_| {
            if rng.gen_bool(0.4) {
                *FILLER.choose(rng).expect("non-empty")
            } else {
                *pool.choose(rng).expect("non-empty")
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn query(i: usize) -> String {
    format!(
        "{} {}",
        QUESTIONS[i % QUESTIONS.len()],
        SUBJECTS[(i / QUESTIONS.len() + i) % SUBJECTS.len()]
    )
}

/// `n` query tasks, each with three ranked passages and one item.
pub fn topics(n: usize, seed: u64) -> Vec<QueryTask> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let q = query(i);
            let passages = (1..=3)
                .map(|rank| Passage {
                    docid: format!("doc-{i:03}-{rank}"),
                    text: format!("When it comes to {q}, {}.", sentence(&mut rng, neutral(), 12)),
                    rank,
                })
                .collect();
            let (item, kind, qualities) = ITEMS[i % ITEMS.len()];
            QueryTask {
                id: format!("t{i:03}"),
                query: q,
                items: vec![AdItem {
                    item: item.into(),
                    kind: kind.into(),
                    qualities: qualities.into(),
                }],
                passages,
            }
        })
        .collect()
}

/// A balanced labeled set shaped like answer-level ad detection data.
/// Roughly one in eight examples is written against type to add noise.
pub fn labeled(n: usize, seed: u64, source: Source) -> Vec<LabeledExample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            // Consecutive pairs share a query so the query carries no label signal.
            let ad = i % 2 == 0;
            let q = query(i / 2);
            let base = sentence(&mut rng, neutral(), 10);
            let flip = rng.gen_ratio(1, 8);
            let response = if ad != flip {
                let (item, _, _) = ITEMS[rng.gen_range(0..ITEMS.len())];
                format!("{base}. {item} is {}.", sentence(&mut rng, promotional(), 5))
            } else {
                format!("{base}. {}.", sentence(&mut rng, neutral(), 5))
            };
            LabeledExample::new(
                format!("{}-{i:04}", source.as_str()),
                q,
                response,
                Label::from_bool(ad),
                source,
            )
        })
        .collect()
}

/// Ad-bearing examples in the naive synthetic style.
pub fn naive_ads(n: usize, seed: u64) -> Vec<LabeledExample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let (item, kind, _) = ITEMS[i % ITEMS.len()];
            let response = format!(
                "{}. Many readers like the {item} {kind}, a {} pick.",
                sentence(&mut rng, neutral(), 10),
                sentence(&mut rng, promotional(), 3)
            );
            LabeledExample::new(format!("naive-{i:04}"), query(i), response, Label::Ad, Source::NaiveSynth)
        })
        .collect()
}

/// Hard positive / hard negative style pairs about made-up products.
pub fn structured_pairs(n_pairs: usize, seed: u64) -> Vec<LabeledExample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(2 * n_pairs);
    for i in 0..n_pairs {
        let (item, kind, qualities) = ITEMS[i % ITEMS.len()];
        out.push(LabeledExample::new(
            format!("structured-{i:04}-pos"),
            item,
            format!(
                "After a month with the {item}, a {kind} that is {qualities}, I {} it.",
                sentence(&mut rng, promotional(), 4)
            ),
            Label::Ad,
            Source::StructuredSynth,
        ));
        out.push(LabeledExample::new(
            format!("structured-{i:04}-neg"),
            item,
            format!("The {item} is a {kind}. {}.", sentence(&mut rng, neutral(), 8)),
            Label::NoAd,
            Source::StructuredSynth,
        ));
    }
    out
}

/// All three training sources, sized for quick recipe runs.
pub fn recipe_data(seed: u64) -> SourceData {
    HashMap::from([
        (Source::Webis, labeled(160, seed, Source::Webis)),
        (Source::NaiveSynth, naive_ads(60, seed.wrapping_add(1))),
        (Source::StructuredSynth, structured_pairs(12, seed.wrapping_add(2))),
    ])
}

const ENTITY_NAMES: &[(&str, &str, &[&str], Option<i32>)] = &[
    ("Orbis K7", "camera", &["P176", "P593"], Some(2021)),
    ("Quillstone Reader", "computing device", &["P176"], Some(2013)),
    ("Harbor Lights", "book", &["P50", "P123"], Some(2004)),
    ("Tempo Drum 808X", "synthesizer", &["P176", "P287"], Some(1996)),
    ("Mistral Roadster", "automobile", &["P176", "P179"], Some(2019)),
    ("Pixelvale", "video game", &["P178", "P12969"], Some(2023)),
    ("Copperline Kettle", "product", &["P176"], None),
    ("Starling Phone 2", "mobile phone", &["P176", "P593"], Some(2016)),
    ("Gearhand Wrench Set", "tool", &["P176"], Some(1988)),
    ("Nimbus Notes", "software", &["P178", "P9618"], Some(2010)),
];

/// Ten fixture pages; three lack a release year at or after 2000.
pub fn entity_pages() -> Vec<RawPage> {
    ENTITY_NAMES
        .iter()
        .map(|(name, infobox, props, year)| RawPage {
            page_title: format!("{name} ({infobox})"),
            product_name: name.to_string(),
            infobox: infobox.to_string(),
            raw_text: format!(
                "The {name} is a {infobox} known for its build quality. Reviewers noted its design and \
                 everyday reliability."
            ),
            wikidata_properties: props.iter().map(|p| p.to_string()).collect(),
            release_year: *year,
        })
        .collect()
}
