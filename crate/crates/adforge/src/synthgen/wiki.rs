//! Live entity source backed by the public Wikipedia and Wikidata APIs.
//!
//! Pages are listed by infobox transclusion (`list=embeddedin`), their plain
//! text and Wikidata item fetched with `prop=extracts|pageprops`, and the
//! item's claims read with `wbgetentities`. The release year is the earliest
//! publication date (P577) or, failing that, inception (P571).

use std::collections::BTreeMap;
use std::time::Duration;

use serde_json::Value;

use super::entities::{EntitySource, PageBatch, RawPage};
use super::SynthError;

pub const ENV_WIKI_BASE_URL: &str = "ADFORGE_WIKI_BASE_URL";
pub const WIKIPEDIA_API: &str = "https://en.wikipedia.org/w/api.php";
pub const WIKIDATA_API: &str = "https://www.wikidata.org/w/api.php";
/// Both APIs cap titles/ids per request at 50; extracts at 20.
const BATCH: usize = 20;

#[derive(Debug, Clone)]
pub struct WikiSource {
    pub wikipedia_api: String,
    pub wikidata_api: String,
    pub pages_per_infobox: usize,
    http: reqwest::blocking::Client,
}

impl WikiSource {
    pub fn new(wikipedia_api: impl Into<String>, wikidata_api: impl Into<String>) -> Result<Self, SynthError> {
        let http = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(30))
            .user_agent(concat!("adforge/", env!("CARGO_PKG_VERSION")))
            .build()
            .map_err(|e| SynthError::SourceUnavailable(e.to_string()))?;
        Ok(Self {
            wikipedia_api: wikipedia_api.into(),
            wikidata_api: wikidata_api.into(),
            pages_per_infobox: 50,
            http,
        })
    }

    /// Public endpoints, or a single mirror at `$ADFORGE_WIKI_BASE_URL/w/api.php`
    /// answering both action sets.
    pub fn from_env() -> Result<Self, SynthError> {
        match std::env::var(ENV_WIKI_BASE_URL) {
            Ok(base) if !base.is_empty() => {
                let api = format!("{}/w/api.php", base.trim_end_matches('/'));
                Self::new(api.clone(), api)
            }
            _ => Self::new(WIKIPEDIA_API, WIKIDATA_API),
        }
    }

    fn get(&self, url: &str, params: &[(&str, String)]) -> Result<Value, SynthError> {
        let reply = self
            .http
            .get(url)
            .query(params)
            .send()
            .and_then(|r| r.error_for_status())
            .map_err(|e| SynthError::SourceUnavailable(e.to_string()))?;
        reply
            .json::<Value>()
            .map_err(|e| SynthError::SourceUnavailable(format!("unreadable reply from {url}: {e}")))
    }

    fn list_infobox_pages(&self, infobox: &str) -> Result<Vec<String>, SynthError> {
        let params = [
            ("action", "query".to_string()),
            ("format", "json".to_string()),
            ("list", "embeddedin".to_string()),
            ("eititle", format!("Template:Infobox {infobox}")),
            ("einamespace", "0".to_string()),
            ("eilimit", self.pages_per_infobox.to_string()),
        ];
        Ok(parse_embeddedin(&self.get(&self.wikipedia_api, &params)?))
    }

    fn page_details(&self, titles: &[String]) -> Result<Vec<PageDetail>, SynthError> {
        let params = [
            ("action", "query".to_string()),
            ("format", "json".to_string()),
            ("prop", "extracts|pageprops".to_string()),
            ("ppprop", "wikibase_item".to_string()),
            ("explaintext", "1".to_string()),
            ("exintro", "1".to_string()),
            ("exlimit", "max".to_string()),
            ("titles", titles.join("|")),
        ];
        Ok(parse_page_details(&self.get(&self.wikipedia_api, &params)?))
    }

    fn claims(&self, ids: &[String]) -> Result<BTreeMap<String, ItemClaims>, SynthError> {
        let params = [
            ("action", "wbgetentities".to_string()),
            ("format", "json".to_string()),
            ("props", "claims".to_string()),
            ("ids", ids.join("|")),
        ];
        Ok(parse_claims(&self.get(&self.wikidata_api, &params)?))
    }
}

impl EntitySource for WikiSource {
    fn pages(&self, infoboxes: &[&str]) -> Result<PageBatch, SynthError> {
        let mut batch = PageBatch::default();
        for infobox in infoboxes {
            let titles = self.list_infobox_pages(infobox)?;
            for chunk in titles.chunks(BATCH) {
                let details = self.page_details(chunk)?;
                let ids: Vec<String> = details.iter().filter_map(|d| d.wikidata_id.clone()).collect();
                let claims = if ids.is_empty() { BTreeMap::new() } else { self.claims(&ids)? };
                for d in details {
                    let Some(item) = d.wikidata_id.as_ref().and_then(|id| claims.get(id)) else {
                        batch.malformed += 1;
                        continue;
                    };
                    batch.pages.push(RawPage {
                        product_name: product_name_from_title(&d.title),
                        page_title: d.title,
                        infobox: infobox.to_string(),
                        raw_text: d.extract,
                        wikidata_properties: item.properties.clone(),
                        release_year: item.release_year,
                    });
                }
            }
        }
        Ok(batch)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PageDetail {
    pub title: String,
    pub wikidata_id: Option<String>,
    pub extract: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ItemClaims {
    pub properties: Vec<String>,
    pub release_year: Option<i32>,
}

/// Page titles from an `embeddedin` listing.
pub fn parse_embeddedin(reply: &Value) -> Vec<String> {
    reply["query"]["embeddedin"]
        .as_array()
        .map(|pages| {
            pages
                .iter()
                .filter_map(|p| p["title"].as_str().map(str::to_string))
                .collect()
        })
        .unwrap_or_default()
}

/// Title, Wikidata id and intro text of each page, sorted by title.
pub fn parse_page_details(reply: &Value) -> Vec<PageDetail> {
    let mut out: Vec<PageDetail> = reply["query"]["pages"]
        .as_object()
        .map(|pages| {
            pages
                .values()
                .filter_map(|p| {
                    Some(PageDetail {
                        title: p["title"].as_str()?.to_string(),
                        wikidata_id: p["pageprops"]["wikibase_item"].as_str().map(str::to_string),
                        extract: p["extract"].as_str().unwrap_or_default().to_string(),
                    })
                })
                .collect()
        })
        .unwrap_or_default();
    out.sort_by(|a, b| a.title.cmp(&b.title));
    out
}

/// Property ids present on each item, plus its release year.
pub fn parse_claims(reply: &Value) -> BTreeMap<String, ItemClaims> {
    let mut out = BTreeMap::new();
    let Some(entities) = reply["entities"].as_object() else {
        return out;
    };
    for (id, entity) in entities {
        let Some(claims) = entity["claims"].as_object() else {
            continue;
        };
        let release_year = earliest_year(&entity["claims"]["P577"]).or_else(|| earliest_year(&entity["claims"]["P571"]));
        out.insert(
            id.clone(),
            ItemClaims {
                properties: claims.keys().cloned().collect(),
                release_year,
            },
        );
    }
    out
}

fn earliest_year(statements: &Value) -> Option<i32> {
    statements
        .as_array()?
        .iter()
        .filter_map(|s| s["mainsnak"]["datavalue"]["value"]["time"].as_str())
        .filter_map(year_of)
        .min()
}

/// `"+2017-01-04T00:00:00Z"` → 2017.
fn year_of(time: &str) -> Option<i32> {
    let (sign, rest) = match time.as_bytes().first()? {
        b'-' => (-1, &time[1..]),
        b'+' => (1, &time[1..]),
        _ => (1, time),
    };
    rest.split('-').next()?.parse::<i32>().ok().map(|y| sign * y)
}

/// Drops a trailing disambiguation suffix such as `" (camera)"`.
pub fn product_name_from_title(title: &str) -> String {
    match title.rfind(" (") {
        Some(i) if title.ends_with(')') => title[..i].to_string(),
        _ => title.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn embeddedin_titles() {
        let reply = json!({"query": {"embeddedin": [{"pageid": 1, "ns": 0, "title": "Nikon D850"}, {"title": "Canon EOS R5"}]}});
        assert_eq!(parse_embeddedin(&reply), vec!["Nikon D850", "Canon EOS R5"]);
        assert!(parse_embeddedin(&json!({})).is_empty());
    }

    #[test]
    fn page_details_sorted() {
        let reply = json!({"query": {"pages": {
            "20": {"title": "Zeta (camera)", "extract": "Zeta is...", "pageprops": {"wikibase_item": "Q2"}},
            "10": {"title": "Alpha", "extract": "Alpha is..."}
        }}});
        let d = parse_page_details(&reply);
        assert_eq!(d[0].title, "Alpha");
        assert_eq!(d[0].wikidata_id, None);
        assert_eq!(d[1].wikidata_id.as_deref(), Some("Q2"));
    }

    #[test]
    fn claims_and_release_year() {
        let time = |t: &str| json!({"mainsnak": {"datavalue": {"value": {"time": t}}}});
        let reply = json!({"entities": {
            "Q1": {"claims": {"P176": [], "P577": [time("+2019-05-01T00:00:00Z"), time("+2017-01-04T00:00:00Z")]}},
            "Q2": {"claims": {"P31": [], "P571": [time("+1998-00-00T00:00:00Z")]}},
            "Q3": {"claims": {"P50": []}}
        }});
        let c = parse_claims(&reply);
        assert_eq!(c["Q1"].release_year, Some(2017));
        assert_eq!(c["Q1"].properties, vec!["P176", "P577"]);
        assert_eq!(c["Q2"].release_year, Some(1998));
        assert_eq!(c["Q3"].release_year, None);
    }

    #[test]
    fn disambiguation_stripped() {
        assert_eq!(product_name_from_title("Zeta (camera)"), "Zeta");
        assert_eq!(product_name_from_title("Half-Life 2"), "Half-Life 2");
        assert_eq!(year_of("-0300-00-00T00:00:00Z"), Some(-300));
    }
}
