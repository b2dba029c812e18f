//! Data contracts and JSONL I/O.
//!
//! Two input schemas are supported, one JSON object per line:
//!
//! ```text
//! topics:  {"id", "query", "items": [{"item", "type", "qualities"}], "passages": [{"docid", "text", "rank"}]}
//! labeled: {"id", "query", "response", "label": 0|1, "source"}
//! ```
//!
//! Every intermediate artifact produced by the pipeline is written with
//! [`write_jsonl`] and read back with [`read_jsonl`].

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Passages past this rank are kept on load but not used to build prompts.
pub const DEFAULT_TOP_K: usize = 5;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("missing file: {}", .0.display())]
    MissingFile(PathBuf),
    #[error("{}:{line}: {message}", .path.display())]
    Schema {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("need at least 2 examples to split, got {0}")]
    TooFewExamples(usize),
    #[error("held-out fraction must lie in (0, 1), got {0}")]
    InvalidFraction(f64),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// One retrieved passage. Ranks start at 1.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Passage {
    pub docid: String,
    pub text: String,
    pub rank: u32,
}

/// An item to advertise; the fields bind the rewrite prompt's `{item}`,
/// `{type}` and `{qualities}` placeholders.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AdItem {
    pub item: String,
    #[serde(rename = "type")]
    pub kind: String,
    pub qualities: String,
}

/// A query with its passages and the (possibly empty) list of items to place.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryTask {
    pub id: String,
    pub query: String,
    #[serde(default)]
    pub items: Vec<AdItem>,
    #[serde(default)]
    pub passages: Vec<Passage>,
}

impl QueryTask {
    /// The first `k` passages in rank order.
    pub fn top_passages(&self, k: usize) -> &[Passage] {
        &self.passages[..k.min(self.passages.len())]
    }

    fn validate(&self) -> Result<(), String> {
        if self.id.is_empty() {
            return Err("empty id".into());
        }
        let mut last_rank = 0;
        for p in &self.passages {
            if p.rank < 1 {
                return Err(format!("passage {} has rank 0", p.docid));
            }
            if p.rank <= last_rank {
                return Err(format!("passage {} breaks ascending rank order", p.docid));
            }
            if p.text.is_empty() {
                return Err(format!("passage {} has empty text", p.docid));
            }
            last_rank = p.rank;
        }
        if let Some(item) = self.items.iter().find(|i| i.item.is_empty()) {
            return Err(format!("item of type {:?} has empty description", item.kind));
        }
        Ok(())
    }
}

/// Binary ad label, serialized strictly as the integers `0` and `1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    NoAd,
    Ad,
}

impl Label {
    pub fn as_u8(self) -> u8 {
        match self {
            Label::NoAd => 0,
            Label::Ad => 1,
        }
    }

    pub fn is_ad(self) -> bool {
        self == Label::Ad
    }

    pub fn from_bool(ad: bool) -> Self {
        if ad {
            Label::Ad
        } else {
            Label::NoAd
        }
    }
}

impl Serialize for Label {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u8(self.as_u8())
    }
}

impl<'de> Deserialize<'de> for Label {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match i64::deserialize(d)? {
            0 => Ok(Label::NoAd),
            1 => Ok(Label::Ad),
            other => Err(serde::de::Error::custom(format!(
                "label must be 0 or 1, got {other}"
            ))),
        }
    }
}

/// Where a labeled example came from.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    #[default]
    Webis,
    NaiveSynth,
    StructuredSynth,
    Pipeline,
}

impl Source {
    pub fn as_str(self) -> &'static str {
        match self {
            Source::Webis => "webis",
            Source::NaiveSynth => "naive_synth",
            Source::StructuredSynth => "structured_synth",
            Source::Pipeline => "pipeline",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledExample {
    pub id: String,
    pub query: String,
    pub response: String,
    pub label: Label,
    #[serde(default)]
    pub source: Source,
}

impl LabeledExample {
    pub fn new(
        id: impl Into<String>,
        query: impl Into<String>,
        response: impl Into<String>,
        label: Label,
        source: Source,
    ) -> Self {
        Self {
            id: id.into(),
            query: query.into(),
            response: response.into(),
            label,
            source,
        }
    }
}

/// A stratified train / held-out partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub train: Vec<LabeledExample>,
    pub held_out: Vec<LabeledExample>,
    pub seed: u64,
}

impl DatasetSplit {
    /// Wraps a training set without holding anything out.
    pub fn train_only(train: Vec<LabeledExample>) -> Self {
        Self {
            train,
            held_out: Vec::new(),
            seed: 0,
        }
    }
}

/// Reads one JSON value per non-blank line.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, CorpusError> {
    let file = File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => CorpusError::MissingFile(path.to_path_buf()),
        _ => CorpusError::Io(e),
    })?;
    let mut out = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line).map_err(|e| CorpusError::Schema {
            path: path.to_path_buf(),
            line: idx + 1,
            message: e.to_string(),
        })?;
        out.push(record);
    }
    Ok(out)
}

/// Writes one JSON object per LF-terminated line and returns the record count.
pub fn write_jsonl<T: Serialize>(records: &[T], path: &Path) -> Result<usize, CorpusError> {
    let mut w = BufWriter::new(File::create(path)?);
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(records.len())
}

/// Loads a topics file, rejecting the first record that breaks the schema or
/// its invariants.
pub fn load_topics(path: &Path) -> Result<Vec<QueryTask>, CorpusError> {
    let tasks: Vec<QueryTask> = read_jsonl(path)?;
    let mut seen = HashSet::new();
    // read_jsonl skips blank lines, so recover physical line numbers for errors.
    let line_numbers = non_blank_line_numbers(path)?;
    for (task, line) in tasks.iter().zip(line_numbers) {
        let schema = |message: String| CorpusError::Schema {
            path: path.to_path_buf(),
            line,
            message,
        };
        task.validate().map_err(schema)?;
        if !seen.insert(task.id.as_str()) {
            return Err(schema(format!("duplicate id {:?}", task.id)));
        }
    }
    Ok(tasks)
}

/// Loads a labeled file. Labels other than 0/1 and empty responses are
/// schema errors.
pub fn load_labeled(path: &Path) -> Result<Vec<LabeledExample>, CorpusError> {
    let examples: Vec<LabeledExample> = read_jsonl(path)?;
    let line_numbers = non_blank_line_numbers(path)?;
    for (ex, line) in examples.iter().zip(line_numbers) {
        if ex.response.is_empty() {
            return Err(CorpusError::Schema {
                path: path.to_path_buf(),
                line,
                message: format!("example {:?} has an empty response", ex.id),
            });
        }
    }
    Ok(examples)
}

fn non_blank_line_numbers(path: &Path) -> Result<Vec<usize>, CorpusError> {
    let file = File::open(path)?;
    let mut out = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        if !line?.trim().is_empty() {
            out.push(idx + 1);
        }
    }
    Ok(out)
}

/// Stratified, seeded split.
///
/// `round(fraction * n)` examples are held out. The held-out quota is shared
/// between the classes in proportion to their size, and the members of each
/// class are drawn after sorting by id, so the result depends only on the
/// ids, labels, fraction and seed, never on input order.
pub fn split_dataset(
    examples: &[LabeledExample],
    held_out_fraction: f64,
    seed: u64,
) -> Result<DatasetSplit, CorpusError> {
    let n = examples.len();
    if n < 2 {
        return Err(CorpusError::TooFewExamples(n));
    }
    if !(held_out_fraction > 0.0 && held_out_fraction < 1.0) {
        return Err(CorpusError::InvalidFraction(held_out_fraction));
    }
    let n_held = (held_out_fraction * n as f64).round() as usize;

    let mut by_class: HashMap<Label, Vec<usize>> = HashMap::new();
    for (i, ex) in examples.iter().enumerate() {
        by_class.entry(ex.label).or_default().push(i);
    }
    let pos = by_class.get(&Label::Ad).map_or(0, Vec::len);
    let neg = n - pos;
    let mut pos_held = ((n_held as f64) * pos as f64 / n as f64).round() as usize;
    pos_held = pos_held.min(pos).max(n_held.saturating_sub(neg));
    let quotas = [(Label::Ad, pos_held), (Label::NoAd, n_held - pos_held)];

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut held = vec![false; n];
    for (label, quota) in quotas {
        let Some(members) = by_class.get_mut(&label) else {
            continue;
        };
        members.sort_by(|&a, &b| examples[a].id.cmp(&examples[b].id));
        members.shuffle(&mut rng);
        for &i in members.iter().take(quota) {
            held[i] = true;
        }
    }

    let (mut train, mut held_out) = (Vec::new(), Vec::new());
    for (ex, h) in examples.iter().zip(held) {
        if h {
            held_out.push(ex.clone());
        } else {
            train.push(ex.clone());
        }
    }
    Ok(DatasetSplit {
        train,
        held_out,
        seed,
    })
}
