//! Product entity harvesting and recency filtering.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::SynthError;

/// Infobox namespaces likely to hold advertisable products.
pub const DEFAULT_INFOBOXES: [&str; 25] = [
    "product",
    "brand",
    "automobile",
    "motorcycle",
    "tractor",
    "calculator",
    "computing device",
    "keyboard",
    "software",
    "camera",
    "mobile phone",
    "night vision device",
    "synthesizer",
    "tool",
    "watch",
    "pinball",
    "toy",
    "film",
    "book",
    "Asian comic series",
    "comic",
    "musical",
    "furniture",
    "video game",
    "drug",
];

/// Wikidata properties whose presence marks a concrete product.
pub const DEFAULT_PROPERTIES: [(&str, &str); 19] = [
    ("P50", "author"),
    ("P86", "composer"),
    ("P110", "illustrator"),
    ("P123", "publisher"),
    ("P162", "producer"),
    ("P170", "creator"),
    ("P176", "manufacturer"),
    ("P178", "developer"),
    ("P179", "product series"),
    ("P287", "designed by"),
    ("P593", "model number"),
    ("P676", "lyricist"),
    ("P943", "programmer"),
    ("P3640", "National Drug Code"),
    ("P4087", "MyAnimeList manga ID"),
    ("P8731", "AniList manga ID"),
    ("P9618", "AlternativeTo software ID"),
    ("P9897", "App Store age rating"),
    ("P12969", "game designer"),
];

pub const MIN_RELEASE_YEAR: i32 = 2000;

pub fn default_property_ids() -> Vec<&'static str> {
    DEFAULT_PROPERTIES.iter().map(|(id, _)| *id).collect()
}

/// A page as delivered by an entity source (the fixture line format).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawPage {
    pub page_title: String,
    pub product_name: String,
    pub infobox: String,
    #[serde(default)]
    pub raw_text: String,
    #[serde(default)]
    pub wikidata_properties: Vec<String>,
    #[serde(default)]
    pub release_year: Option<i32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityRecord {
    pub product_name: String,
    pub infobox: String,
    pub page_title: String,
    #[serde(default)]
    pub summary: String,
    #[serde(default)]
    pub key_features: Vec<String>,
    /// 0 when unknown.
    pub release_year: i32,
    pub matched_properties: Vec<String>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub raw_text: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PageBatch {
    pub pages: Vec<RawPage>,
    /// Pages the source could not read.
    pub malformed: usize,
}

/// Somewhere product pages come from.
pub trait EntitySource {
    fn pages(&self, infoboxes: &[&str]) -> Result<PageBatch, SynthError>;
}

/// Pages read from a JSONL fixture dump.
#[derive(Debug, Clone)]
pub struct FixtureSource {
    path: PathBuf,
}

impl FixtureSource {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        Self { path: path.into() }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

impl EntitySource for FixtureSource {
    fn pages(&self, _infoboxes: &[&str]) -> Result<PageBatch, SynthError> {
        let raw = std::fs::read_to_string(&self.path)
            .map_err(|e| SynthError::SourceUnavailable(format!("{}: {e}", self.path.display())))?;
        let mut batch = PageBatch::default();
        for (i, line) in raw.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            match serde_json::from_str::<RawPage>(line) {
                Ok(p) => batch.pages.push(p),
                Err(e) => {
                    log::warn!("{}:{}: skipping malformed entity: {e}", self.path.display(), i + 1);
                    batch.malformed += 1;
                }
            }
        }
        Ok(batch)
    }
}

/// In-memory pages, for examples and tests.
#[derive(Debug, Clone, Default)]
pub struct MemorySource(pub Vec<RawPage>);

impl EntitySource for MemorySource {
    fn pages(&self, _infoboxes: &[&str]) -> Result<PageBatch, SynthError> {
        Ok(PageBatch {
            pages: self.0.clone(),
            malformed: 0,
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Harvest {
    pub records: Vec<EntityRecord>,
    pub malformed: usize,
}

/// Collects pages from the requested infoboxes that carry at least one of the
/// requested product-ness properties.
pub fn harvest_entities(
    source: &dyn EntitySource,
    infoboxes: &[&str],
    properties: &[&str],
) -> Result<Harvest, SynthError> {
    if let Some(bad) = infoboxes.iter().find(|i| !DEFAULT_INFOBOXES.contains(i)) {
        return Err(SynthError::UnknownInfobox(bad.to_string()));
    }
    let known = default_property_ids();
    if let Some(bad) = properties.iter().find(|p| !known.contains(p)) {
        return Err(SynthError::UnknownProperty(bad.to_string()));
    }
    let batch = source.pages(infoboxes)?;
    let mut harvest = Harvest {
        records: Vec::new(),
        malformed: batch.malformed,
    };
    for page in batch.pages {
        if page.product_name.trim().is_empty() || page.page_title.trim().is_empty() {
            log::warn!("skipping entity without a name: {page:?}");
            harvest.malformed += 1;
            continue;
        }
        if !infoboxes.contains(&page.infobox.as_str()) {
            continue;
        }
        let matched: Vec<String> = properties
            .iter()
            .filter(|p| page.wikidata_properties.iter().any(|q| q == *p))
            .map(|p| p.to_string())
            .collect();
        if matched.is_empty() {
            continue;
        }
        harvest.records.push(EntityRecord {
            product_name: page.product_name,
            infobox: page.infobox,
            page_title: page.page_title,
            summary: String::new(),
            key_features: Vec::new(),
            release_year: page.release_year.unwrap_or(0),
            matched_properties: matched,
            raw_text: page.raw_text,
        });
    }
    Ok(harvest)
}

/// Keeps entities released in or after 2000, newest first, ties by name.
pub fn filter_entities(entities: &[EntityRecord]) -> Vec<EntityRecord> {
    let mut kept: Vec<EntityRecord> = entities
        .iter()
        .filter(|e| e.release_year >= MIN_RELEASE_YEAR)
        .cloned()
        .collect();
    kept.sort_by(|a, b| {
        b.release_year
            .cmp(&a.release_year)
            .then_with(|| a.product_name.cmp(&b.product_name))
    });
    kept
}

#[cfg(test)]
mod tests {
    use super::*;

    fn page(name: &str, infobox: &str, props: &[&str], year: Option<i32>) -> RawPage {
        RawPage {
            page_title: name.into(),
            product_name: name.into(),
            infobox: infobox.into(),
            raw_text: format!("{name} is a thing."),
            wikidata_properties: props.iter().map(|s| s.to_string()).collect(),
            release_year: year,
        }
    }

    fn rec(name: &str, year: i32) -> EntityRecord {
        EntityRecord {
            product_name: name.into(),
            infobox: "camera".into(),
            page_title: name.into(),
            summary: String::new(),
            key_features: vec![],
            release_year: year,
            matched_properties: vec!["P176".into()],
            raw_text: String::new(),
        }
    }

    #[test]
    fn product_page_kept_concept_dropped() {
        let src = MemorySource(vec![
            page("Canon EOS 5D", "camera", &["P176"], Some(2005)),
            page("Camera", "camera", &[], None),
        ]);
        let h = harvest_entities(&src, &DEFAULT_INFOBOXES, &default_property_ids()).unwrap();
        assert_eq!(h.records.len(), 1);
        assert_eq!(h.records[0].matched_properties, vec!["P176"]);
    }

    #[test]
    fn empty_source() {
        let h = harvest_entities(&MemorySource::default(), &["camera"], &["P176"]).unwrap();
        assert!(h.records.is_empty());
    }

    #[test]
    fn five_pages_three_matches() {
        let src = MemorySource(vec![
            page("A", "camera", &["P176", "P593", "P31"], Some(2010)),
            page("B", "software", &["P178"], Some(2012)),
            page("C", "book", &["P50", "P123"], None),
            page("D", "camera", &["P31"], Some(2019)),
            page("E", "watch", &["P176"], Some(2001)),
        ]);
        // Only camera, software and book are requested; E's infobox is not.
        let h = harvest_entities(&src, &["camera", "software", "book"], &["P50", "P176", "P178", "P593"]).unwrap();
        let got: Vec<(&str, Vec<String>)> = h
            .records
            .iter()
            .map(|r| (r.product_name.as_str(), r.matched_properties.clone()))
            .collect();
        assert_eq!(
            got,
            vec![
                ("A", vec!["P176".to_string(), "P593".to_string()]),
                ("B", vec!["P178".to_string()]),
                ("C", vec!["P50".to_string()]),
            ]
        );
        assert_eq!(h.records[2].release_year, 0);
    }

    #[test]
    fn unknown_request_lists_rejected() {
        let src = MemorySource::default();
        assert!(matches!(
            harvest_entities(&src, &["spaceship"], &["P176"]),
            Err(SynthError::UnknownInfobox(_))
        ));
        assert!(matches!(
            harvest_entities(&src, &["camera"], &["P31"]),
            Err(SynthError::UnknownProperty(_))
        ));
    }

    #[test]
    fn fixture_source_counts_malformed_lines() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.jsonl");
        let good = serde_json::to_string(&page("X", "camera", &["P176"], Some(2020))).unwrap();
        std::fs::write(&path, format!("{good}\n{{not json\n{{\"page_title\":\"\",\"product_name\":\"\",\"infobox\":\"camera\"}}\n")).unwrap();
        let h = harvest_entities(&FixtureSource::new(&path), &["camera"], &["P176"]).unwrap();
        assert_eq!(h.records.len(), 1);
        assert_eq!(h.malformed, 2);
        assert!(matches!(
            FixtureSource::new(dir.path().join("missing.jsonl")).pages(&[]),
            Err(SynthError::SourceUnavailable(_))
        ));
    }

    #[test]
    fn filter_by_year() {
        let out = filter_entities(&[rec("a", 1999), rec("b", 2005), rec("c", 2023)]);
        let years: Vec<i32> = out.iter().map(|e| e.release_year).collect();
        assert_eq!(years, vec![2023, 2005]);
        assert!(filter_entities(&[rec("a", 1999), rec("b", 0)]).is_empty());
        let names: Vec<String> = filter_entities(&[rec("B", 2010), rec("A", 2010)])
            .into_iter()
            .map(|e| e.product_name)
            .collect();
        assert_eq!(names, vec!["A", "B"]);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn filter_is_sorted_subset_and_idempotent(
                rows in prop::collection::vec(("[A-D]{1,2}", 1990i32..2030), 0..30)
            ) {
                let input: Vec<EntityRecord> = rows.iter().map(|(n, y)| rec(n, *y)).collect();
                let out = filter_entities(&input);
                prop_assert!(out.iter().all(|e| e.release_year >= 2000 && input.contains(e)));
                prop_assert_eq!(out.len(), input.iter().filter(|e| e.release_year >= 2000).count());
                prop_assert!(out.windows(2).all(|w| w[0].release_year > w[1].release_year
                    || (w[0].release_year == w[1].release_year && w[0].product_name <= w[1].product_name)));
                prop_assert_eq!(filter_entities(&out), out);
            }
        }
    }
}
