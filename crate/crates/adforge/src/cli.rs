//! The `adforge` command line: one subcommand per pipeline stage, with
//! JSONL files handing data from one stage to the next.
//!
//! ```text
//! qa -> rewrite -> classify -> evaluate
//!         \-> build-sft
//! synth-naive, synth-structured -> train
//! wilcoxon
//! ```
//!
//! Every subcommand accepts `--config <file.json>`, `--seed`, `--stub` and
//! `--output-dir`. Relative paths in the config resolve against the config
//! file's directory. Exit codes: 0 success, 1 runtime failure, 2 usage error,
//! 3 configuration or input-schema error.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::classifier::{persist_model, restore_model, ClassifierError, ClassifierModel, RemoteScorer, Scorer};
use crate::corpus::{
    load_labeled, load_topics, read_jsonl, write_jsonl, AdItem, CorpusError, Label, LabeledExample, Source,
    DEFAULT_TOP_K,
};
use crate::curriculum::{run_recipe, CurriculumError, RecipeCard, SourceData, TrainerConfig, RECIPE_TAGS};
use crate::eval::{
    build_detection_matrix, confusion, render_report, rows_of, wilcoxon_signed_rank, Alternative, EvalError, NamedPrf,
    NamedWilcoxon, Report, ScoreRun,
};
use crate::generator::{
    build_qa_prompt, ChatClient, EndpointConfig, GenError, GenerationRequest, Generator, StubGenerator,
    DEFAULT_MAX_TOKENS, DEFAULT_TEMPERATURES,
};
use crate::optimizer::{build_sft_record, emit_sft_dataset, rewrite_best_of_n, Backend, OptimizeError, RewriteSettings};
use crate::synthgen::{
    harvest_entities, insert_ad_naive, run_structured, EntitySource, FixtureSource, PromptChoice, PromptPool,
    SynthError, WikiSource, DEFAULT_INFOBOXES, DEFAULT_PROPERTIES,
};
use crate::util::{bounded_map, digest64};

pub const RESPONSES_FILE: &str = "responses.jsonl";
pub const REWRITES_FILE: &str = "rewrites.jsonl";
pub const CANDIDATES_FILE: &str = "candidates.jsonl";
pub const SCORES_FILE: &str = "scores.jsonl";
pub const SFT_FILE: &str = "sft.jsonl";
pub const NAIVE_FILE: &str = "naive_synth.jsonl";
pub const ENTITIES_FILE: &str = "entities.jsonl";
pub const STRUCTURED_FILE: &str = "structured_synth.jsonl";
pub const WILCOXON_FILE: &str = "wilcoxon.json";

/// A failure with the exit code it maps to.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Config(String),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Runtime(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Config(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Config(m) | CliError::Runtime(m) => f.write_str(m),
        }
    }
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        match e {
            CorpusError::MissingFile(_) | CorpusError::Schema { .. } | CorpusError::Json(_) => {
                CliError::Config(e.to_string())
            }
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<GenError> for CliError {
    fn from(e: GenError) -> Self {
        match e {
            GenError::MissingConfig(_) | GenError::MissingSeed => CliError::Config(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<ClassifierError> for CliError {
    fn from(e: ClassifierError) -> Self {
        match &e {
            ClassifierError::FormatVersionMismatch { .. } | ClassifierError::InvalidConfig(_) => {
                CliError::Config(e.to_string())
            }
            ClassifierError::Io(io) if io.kind() == std::io::ErrorKind::NotFound => CliError::Config(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<OptimizeError> for CliError {
    fn from(e: OptimizeError) -> Self {
        match e {
            OptimizeError::Generator(g) => g.into(),
            OptimizeError::Scorer(s) => s.into(),
            OptimizeError::Corpus(c) => c.into(),
            OptimizeError::InvalidSetting(_) => CliError::Config(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<CurriculumError> for CliError {
    fn from(e: CurriculumError) -> Self {
        match e {
            CurriculumError::Classifier(c) => c.into(),
            CurriculumError::UnknownRecipe(_)
            | CurriculumError::MissingSource { .. }
            | CurriculumError::MissingReference(_)
            | CurriculumError::InvalidRecipe(_)
            | CurriculumError::Json(_) => CliError::Config(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<SynthError> for CliError {
    fn from(e: SynthError) -> Self {
        match e {
            SynthError::Generator(g) => g.into(),
            SynthError::Corpus(c) => c.into(),
            SynthError::InvalidPool(_) | SynthError::UnknownInfobox(_) | SynthError::UnknownProperty(_) => {
                CliError::Config(e.to_string())
            }
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Json(_) => CliError::Config(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "adforge", version, about = "Ad integration and ad detection pipeline")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Base seed (default: config value, else 0).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Use the offline stub generator; no network access.
    #[arg(long, global = true)]
    pub stub: bool,
    /// Where outputs are written (default: config value, else ./out).
    #[arg(long, global = true)]
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Answer every topic with the QA prompt.
    Qa(Common),
    /// Rewrite QA answers to carry each topic's item, keeping the least
    /// detectable of n samples.
    Rewrite(RewriteArgs),
    /// Build a fine-tuning dataset of least-detectable rewrites.
    BuildSft(Common),
    /// Insert ads into ad-free answers with the naive prompt pool.
    SynthNaive(SynthNaiveArgs),
    /// Harvest product entities and generate hard positive/negative pairs.
    SynthStructured(SynthStructuredArgs),
    /// Train classifier versions from recipes.
    Train(TrainArgs),
    /// Score rewritten responses with every configured classifier.
    Classify(Common),
    /// Build the detection matrix and metric report from scores.
    Evaluate(Common),
    /// Paired Wilcoxon signed-rank test on a JSONL file of {"a", "b"} pairs.
    Wilcoxon(WilcoxonArgs),
}

#[derive(Debug, Args)]
pub struct RewriteArgs {
    #[command(flatten)]
    pub common: Common,
    /// Candidates per rewrite; 1 is plain zero-shot rewriting.
    #[arg(long)]
    pub n: Option<usize>,
    /// Sampling temperature; repeat for several runs.
    #[arg(long = "temperature")]
    pub temperatures: Vec<f64>,
    /// Method label recorded with each rewrite.
    #[arg(long)]
    pub method: Option<String>,
}

#[derive(Debug, Args)]
pub struct SynthNaiveArgs {
    #[command(flatten)]
    pub common: Common,
    /// `default` (12 prompts), `single`, or a pool file.
    #[arg(long)]
    pub pool: Option<String>,
}

#[derive(Debug, Args)]
pub struct SynthStructuredArgs {
    #[command(flatten)]
    pub common: Common,
    /// Query the live Wikipedia and Wikidata APIs instead of the fixture.
    #[arg(long)]
    pub live: bool,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub common: Common,
    /// Recipe tag or recipe file; repeat to train several in order.
    #[arg(long = "recipe")]
    pub recipes: Vec<String>,
}

#[derive(Debug, Args)]
pub struct WilcoxonArgs {
    #[command(flatten)]
    pub common: Common,
    /// JSONL file with one {"a": x, "b": y} object per line.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, value_parser = parse_alternative)]
    pub alternative: Option<Alternative>,
}

fn parse_alternative(s: &str) -> Result<Alternative, String> {
    match s {
        "two-sided" | "two_sided" => Ok(Alternative::TwoSided),
        "less" => Ok(Alternative::Less),
        "greater" => Ok(Alternative::Greater),
        other => Err(format!("unknown alternative {other:?} (two-sided, less, greater)")),
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    pub topics: Option<PathBuf>,
    /// Webis-style labeled training data.
    pub labeled: Option<PathBuf>,
    /// Labeled data for precision/recall in `evaluate`.
    pub held_out: Option<PathBuf>,
    /// QA answers; defaults to `<output_dir>/responses.jsonl`.
    pub responses: Option<PathBuf>,
    pub naive_synth: Option<PathBuf>,
    pub structured_synth: Option<PathBuf>,
    /// Entity fixture in JSONL.
    pub entities: Option<PathBuf>,
    pub model_store: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerationConfig {
    pub stub: bool,
    pub endpoint: EndpointConfig,
    pub temperatures: Vec<f64>,
    pub n: usize,
    pub k: usize,
    pub max_tokens: u32,
    pub qa_temperature: f64,
    /// Candidates per fine-tuning record.
    pub sft_m: usize,
    /// One sampling temperature per backend slot for fine-tuning data.
    pub sft_temperatures: Vec<f64>,
    pub max_in_flight: usize,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        Self {
            stub: false,
            endpoint: EndpointConfig::default(),
            temperatures: DEFAULT_TEMPERATURES.to_vec(),
            n: 10,
            k: DEFAULT_TOP_K,
            max_tokens: DEFAULT_MAX_TOKENS,
            qa_temperature: 0.0,
            sft_m: 5,
            sft_temperatures: vec![1.0],
            max_in_flight: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingConfig {
    /// Recipe tags or recipe file paths, trained in order.
    pub recipes: Vec<String>,
    pub trainer: TrainerConfig,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            recipes: RECIPE_TAGS.iter().map(|s| s.to_string()).collect(),
            trainer: TrainerConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemoteClassifier {
    pub tag: String,
    pub endpoint: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifyConfig {
    /// Model tags looked up as `<model_store>/<tag>.model.json`.
    pub classifiers: Vec<String>,
    pub remote: Vec<RemoteClassifier>,
    /// Classifier that guides rewriting and fine-tuning data selection.
    pub scorer: String,
    pub threshold: f64,
    /// Rewrite files to score; defaults to `<output_dir>/rewrites.jsonl`.
    pub inputs: Vec<PathBuf>,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        Self {
            classifiers: Vec::new(),
            remote: Vec::new(),
            scorer: "v0.4".into(),
            threshold: crate::classifier::DEFAULT_THRESHOLD,
            inputs: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluateConfig {
    /// Score files; defaults to `<output_dir>/scores.jsonl`.
    pub scores: Vec<PathBuf>,
    /// Method other methods are tested against.
    pub baseline_method: String,
    pub alternative: Alternative,
}

impl Default for EvaluateConfig {
    fn default() -> Self {
        Self {
            scores: Vec::new(),
            baseline_method: "zero-shot".into(),
            alternative: Alternative::TwoSided,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub live: bool,
    pub infoboxes: Vec<String>,
    pub properties: Vec<String>,
    /// `default`, `single`, or a pool file path.
    pub pool: String,
    pub temperature: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            live: false,
            infoboxes: DEFAULT_INFOBOXES.iter().map(|s| s.to_string()).collect(),
            properties: DEFAULT_PROPERTIES.iter().map(|(p, _)| p.to_string()).collect(),
            pool: "default".into(),
            temperature: 1.0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub paths: PathsConfig,
    pub generation: GenerationConfig,
    pub training: TrainingConfig,
    pub classify: ClassifyConfig,
    pub evaluate: EvaluateConfig,
    pub synth: SynthConfig,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let raw = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        let mut config: RunConfig = serde_json::from_str(&raw)
            .map_err(|e| CliError::Config(format!("invalid config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        config.resolve_paths(base);
        Ok(config)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(path) = p {
                if path.is_relative() {
                    *path = base.join(&*path);
                }
            }
        };
        let paths = &mut self.paths;
        for p in [
            &mut paths.topics,
            &mut paths.labeled,
            &mut paths.held_out,
            &mut paths.responses,
            &mut paths.naive_synth,
            &mut paths.structured_synth,
            &mut paths.entities,
            &mut paths.model_store,
            &mut paths.output_dir,
        ] {
            fix(p);
        }
        for list in [&mut self.classify.inputs, &mut self.evaluate.scores] {
            for p in list.iter_mut() {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        }
        if Path::new(&self.synth.pool).extension().is_some() && Path::new(&self.synth.pool).is_relative() {
            self.synth.pool = base.join(&self.synth.pool).to_string_lossy().into_owned();
        }
        for r in &mut self.training.recipes {
            if r.ends_with(".json") && Path::new(r.as_str()).is_relative() {
                *r = base.join(r.as_str()).to_string_lossy().into_owned();
            }
        }
    }
}

/// Resolved settings for one invocation.
struct Ctx {
    config: RunConfig,
    seed: u64,
    stub: bool,
    output_dir: PathBuf,
}

impl Ctx {
    fn new(common: &Common) -> Result<Self, CliError> {
        let config = match &common.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        let output_dir = common
            .output_dir
            .clone()
            .or_else(|| config.paths.output_dir.clone())
            .unwrap_or_else(|| PathBuf::from("out"));
        std::fs::create_dir_all(&output_dir)?;
        Ok(Self {
            seed: common.seed.or(config.seed).unwrap_or(0),
            stub: common.stub || config.generation.stub,
            output_dir,
            config,
        })
    }

    fn out(&self, name: &str) -> PathBuf {
        self.output_dir.join(name)
    }

    fn model_store(&self) -> PathBuf {
        self.config
            .paths
            .model_store
            .clone()
            .unwrap_or_else(|| self.output_dir.join("models"))
    }

    fn required(&self, path: &Option<PathBuf>, what: &str) -> Result<PathBuf, CliError> {
        path.clone()
            .ok_or_else(|| CliError::Config(format!("no {what} path configured (paths.{what})")))
    }

    fn responses_path(&self) -> PathBuf {
        self.config
            .paths
            .responses
            .clone()
            .unwrap_or_else(|| self.out(RESPONSES_FILE))
    }

    fn generator(&self) -> Result<Box<dyn Generator>, CliError> {
        if self.stub {
            return Ok(Box::new(StubGenerator));
        }
        let endpoint = self.config.generation.endpoint.clone().with_env_overrides();
        Ok(Box::new(ChatClient::new(endpoint)?))
    }

    /// A model from the store, or a remote classifier with that tag.
    fn scorer(&self, tag: &str) -> Result<Box<dyn Scorer>, CliError> {
        if let Some(r) = self.config.classify.remote.iter().find(|r| r.tag == tag) {
            return Ok(Box::new(RemoteScorer::new(r.endpoint.clone())?));
        }
        let path = model_path(&self.model_store(), tag);
        if !path.exists() {
            return Err(CliError::Config(format!(
                "no model {tag:?} at {} (train it first or configure classify.remote)",
                path.display()
            )));
        }
        Ok(Box::new(restore_model(&path)?))
    }

    fn task_seed(&self, key: &str) -> u64 {
        self.seed ^ digest64(&[key.as_bytes()])
    }
}

pub fn model_path(store: &Path, tag: &str) -> PathBuf {
    store.join(format!("{tag}.model.json"))
}

pub fn provenance_path(store: &Path, tag: &str) -> PathBuf {
    store.join(format!("{tag}.provenance.json"))
}

/// One rewritten response; loadable as a [`LabeledExample`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewriteLine {
    pub id: String,
    pub query: String,
    pub response: String,
    pub label: Label,
    pub source: Source,
    pub task_id: String,
    pub item: AdItem,
    #[serde(default)]
    pub method: Option<String>,
    #[serde(default)]
    pub temperature: Option<f64>,
    #[serde(default)]
    pub chosen_index: usize,
    #[serde(default)]
    pub chosen_score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateLine {
    pub id: String,
    pub method: String,
    pub temperature: f64,
    #[serde(flatten)]
    pub set: crate::optimizer::CandidateSet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreLine {
    pub id: String,
    /// Matches rewrites of the same task and item across methods.
    pub pair_key: String,
    pub method: String,
    pub temperature: f64,
    pub classifier: String,
    pub score: f64,
    pub label: Label,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pair {
    pub a: f64,
    pub b: f64,
}

fn qa(common: &Common) -> Result<(), CliError> {
    let ctx = Ctx::new(common)?;
    let topics = load_topics(&ctx.required(&ctx.config.paths.topics, "topics")?)?;
    let gen = ctx.generator()?;
    let g = &ctx.config.generation;
    let results = bounded_map(&topics, g.max_in_flight, |_, task| {
        let prompt = build_qa_prompt(task, g.k)?;
        let mut request = GenerationRequest::new(prompt, g.qa_temperature, 1).with_seed(ctx.task_seed(&task.id));
        request.max_tokens = g.max_tokens;
        let text = gen.generate(&request)?.into_iter().next().map(|c| c.text).unwrap_or_default();
        Ok::<_, GenError>(LabeledExample::new(
            task.id.clone(),
            task.query.clone(),
            text,
            Label::NoAd,
            Source::Pipeline,
        ))
    });
    let responses = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    let n = write_jsonl(&responses, &ctx.out(RESPONSES_FILE))?;
    log::info!("wrote {n} responses to {}", ctx.out(RESPONSES_FILE).display());
    Ok(())
}

/// One item of one answered task: (task id, query, QA response, item, item index).
type RewriteJob = (String, String, String, AdItem, usize);

fn rewrite_jobs(ctx: &Ctx) -> Result<Vec<RewriteJob>, CliError> {
    let topics = load_topics(&ctx.required(&ctx.config.paths.topics, "topics")?)?;
    let responses = load_labeled(&ctx.responses_path())?;
    let by_id: BTreeMap<&str, &LabeledExample> = responses.iter().map(|r| (r.id.as_str(), r)).collect();
    let mut jobs = Vec::new();
    for task in &topics {
        let Some(resp) = by_id.get(task.id.as_str()) else {
            log::warn!("no QA response for task {}", task.id);
            continue;
        };
        for (i, item) in task.items.iter().enumerate() {
            jobs.push((task.id.clone(), task.query.clone(), resp.response.clone(), item.clone(), i));
        }
    }
    Ok(jobs)
}

fn rewrite(args: &RewriteArgs) -> Result<(), CliError> {
    let ctx = Ctx::new(&args.common)?;
    let g = &ctx.config.generation;
    let n = args.n.unwrap_or(g.n);
    let temperatures = if args.temperatures.is_empty() {
        g.temperatures.clone()
    } else {
        args.temperatures.clone()
    };
    let method = args
        .method
        .clone()
        .unwrap_or_else(|| if n == 1 { "zero-shot" } else { "best-of-n" }.to_string());
    let gen = ctx.generator()?;
    let scorer = ctx.scorer(&ctx.config.classify.scorer)?;
    let jobs = rewrite_jobs(&ctx)?;

    let mut rewrites = Vec::new();
    let mut candidates = Vec::new();
    for &temperature in &temperatures {
        let results = bounded_map(&jobs, g.max_in_flight, |_, (task_id, query, response, item, i)| {
            let settings = RewriteSettings {
                n,
                temperature,
                max_tokens: g.max_tokens,
                seed: ctx.task_seed(&format!("{task_id}/{i}")),
            };
            rewrite_best_of_n(query, response, item, &*gen, &*scorer, &settings)
        });
        for ((task_id, query, _, item, i), set) in jobs.iter().zip(results) {
            let set = set?;
            let id = format!("{task_id}-{i}-{method}-t{temperature}");
            rewrites.push(RewriteLine {
                id: id.clone(),
                query: query.clone(),
                response: set.chosen().text.clone(),
                label: Label::Ad,
                source: Source::Pipeline,
                task_id: task_id.clone(),
                item: item.clone(),
                method: Some(method.clone()),
                temperature: Some(temperature),
                chosen_index: set.chosen_index,
                chosen_score: Some(set.chosen_score()),
            });
            candidates.push(CandidateLine {
                id,
                method: method.clone(),
                temperature,
                set,
            });
        }
    }
    // Earlier runs of other methods stay in place so they can be compared.
    let mut kept: Vec<RewriteLine> = read_if_exists(&ctx.out(REWRITES_FILE))?;
    kept.retain(|r| r.method.as_deref() != Some(method.as_str()));
    kept.extend(rewrites);
    write_jsonl(&kept, &ctx.out(REWRITES_FILE))?;
    let mut kept_sets: Vec<CandidateLine> = read_if_exists(&ctx.out(CANDIDATES_FILE))?;
    kept_sets.retain(|c| c.method != method);
    kept_sets.extend(candidates);
    write_jsonl(&kept_sets, &ctx.out(CANDIDATES_FILE))?;
    log::info!("wrote {} rewrites ({method}, n={n})", kept.iter().filter(|r| r.method.as_deref() == Some(method.as_str())).count());
    Ok(())
}

fn read_if_exists<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>, CliError> {
    if path.exists() {
        Ok(read_jsonl(path)?)
    } else {
        Ok(Vec::new())
    }
}

fn build_sft(common: &Common) -> Result<(), CliError> {
    let ctx = Ctx::new(common)?;
    let g = &ctx.config.generation;
    let gen = ctx.generator()?;
    let scorer = ctx.scorer(&ctx.config.classify.scorer)?;
    let backends: Vec<Backend<'_>> = g.sft_temperatures.iter().map(|&t| (&*gen as &dyn Generator, t)).collect();
    let jobs = rewrite_jobs(&ctx)?;
    let results = bounded_map(&jobs, g.max_in_flight, |_, (task_id, query, response, item, i)| {
        build_sft_record(
            query,
            response,
            item,
            &backends,
            &*scorer,
            g.sft_m,
            ctx.task_seed(&format!("{task_id}/{i}")),
        )
    });
    let records = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    let n = emit_sft_dataset(&records, &ctx.out(SFT_FILE))?;
    log::info!("wrote {n} fine-tuning records");
    Ok(())
}

fn load_pool(choice: &str) -> Result<PromptPool, CliError> {
    Ok(match choice {
        "default" => PromptPool::default_pool(),
        "single" => PromptPool::single_prompt_pool(),
        path => PromptPool::load(Path::new(path))?,
    })
}

fn synth_naive(args: &SynthNaiveArgs) -> Result<(), CliError> {
    let ctx = Ctx::new(&args.common)?;
    let pool = load_pool(args.pool.as_deref().unwrap_or(&ctx.config.synth.pool))?;
    let gen = ctx.generator()?;
    let inputs: Vec<LabeledExample> = load_labeled(&ctx.responses_path())?
        .into_iter()
        .filter(|e| !e.label.is_ad())
        .collect();
    let temperature = ctx.config.synth.temperature;
    let results = bounded_map(&inputs, ctx.config.generation.max_in_flight, |_, e| {
        insert_ad_naive(
            &e.query,
            &e.response,
            &pool,
            PromptChoice::Seeded,
            &*gen,
            temperature,
            ctx.task_seed(&e.id),
        )
    });
    let out = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    let n = write_jsonl(&out, &ctx.out(NAIVE_FILE))?;
    log::info!("wrote {n} naive insertions using a pool of {}", pool.len());
    Ok(())
}

fn synth_structured(args: &SynthStructuredArgs) -> Result<(), CliError> {
    let ctx = Ctx::new(&args.common)?;
    let s = &ctx.config.synth;
    let source: Box<dyn EntitySource> = if args.live || s.live {
        Box::new(WikiSource::from_env()?)
    } else {
        Box::new(FixtureSource::new(ctx.required(&ctx.config.paths.entities, "entities")?))
    };
    let infoboxes: Vec<&str> = s.infoboxes.iter().map(String::as_str).collect();
    let properties: Vec<&str> = s.properties.iter().map(String::as_str).collect();
    let harvest = harvest_entities(&*source, &infoboxes, &properties)?;
    if harvest.malformed > 0 {
        log::warn!("skipped {} malformed entities", harvest.malformed);
    }
    let gen = ctx.generator()?;
    let run = run_structured(&harvest.records, &*gen, s.temperature, ctx.seed, ctx.config.generation.max_in_flight);
    write_jsonl(&run.entities, &ctx.out(ENTITIES_FILE))?;
    let n = write_jsonl(&run.examples(), &ctx.out(STRUCTURED_FILE))?;
    log::info!(
        "wrote {n} structured examples from {} entities ({} failed)",
        run.entities.len(),
        run.failures.len()
    );
    Ok(())
}

fn train(args: &TrainArgs) -> Result<(), CliError> {
    let ctx = Ctx::new(&args.common)?;
    let recipes = if args.recipes.is_empty() {
        ctx.config.training.recipes.clone()
    } else {
        args.recipes.clone()
    };
    let cards = recipes
        .iter()
        .map(|r| {
            if r.ends_with(".json") {
                RecipeCard::load(Path::new(r))
            } else {
                RecipeCard::preset(r)
            }
        })
        .collect::<Result<Vec<_>, _>>()?;

    let p = &ctx.config.paths;
    let mut data = SourceData::new();
    let needs = |s: Source| cards.iter().any(|c| c.sources.contains(&s));
    if let Some(path) = &p.labeled {
        data.insert(Source::Webis, load_labeled(path)?);
    }
    if needs(Source::NaiveSynth) {
        let path = p.naive_synth.clone().unwrap_or_else(|| ctx.out(NAIVE_FILE));
        if path.exists() {
            data.insert(Source::NaiveSynth, load_labeled(&path)?);
        }
    }
    if needs(Source::StructuredSynth) {
        let path = p.structured_synth.clone().unwrap_or_else(|| ctx.out(STRUCTURED_FILE));
        if path.exists() {
            data.insert(Source::StructuredSynth, load_labeled(&path)?);
        }
    }

    let store = ctx.model_store();
    std::fs::create_dir_all(&store)?;
    let mut trained: BTreeMap<String, ClassifierModel> = BTreeMap::new();
    let mut trainer = ctx.config.training.trainer.clone();
    trainer.logreg.seed = ctx.seed;
    for card in &cards {
        let reference = match &card.reference_tag {
            Some(tag) if card.curriculum => match trained.get(tag) {
                Some(m) => Some(m.clone()),
                None => {
                    let path = model_path(&store, tag);
                    if path.exists() {
                        Some(restore_model(&path)?)
                    } else {
                        None
                    }
                }
            },
            _ => None,
        };
        let outcome = run_recipe(card, &data, &trainer, reference.as_ref())?;
        persist_model(&outcome.model, &model_path(&store, &card.tag))?;
        std::fs::write(
            provenance_path(&store, &card.tag),
            serde_json::to_string_pretty(&outcome.provenance).map_err(std::io::Error::from)? + "\n",
        )?;
        log::info!("trained {} on {:?}", card.tag, outcome.provenance.source_counts);
        trained.insert(card.tag.clone(), outcome.model);
    }
    Ok(())
}

fn pair_key(line: &RewriteLine) -> String {
    format!("{}/{}", line.task_id, line.item.item)
}

fn classify(common: &Common) -> Result<(), CliError> {
    let ctx = Ctx::new(common)?;
    let c = &ctx.config.classify;
    let inputs = if c.inputs.is_empty() {
        vec![ctx.out(REWRITES_FILE)]
    } else {
        c.inputs.clone()
    };
    let mut tags: Vec<String> = c.classifiers.clone();
    tags.extend(c.remote.iter().map(|r| r.tag.clone()).filter(|t| !c.classifiers.contains(t)));
    if tags.is_empty() {
        tags.push(c.scorer.clone());
    }
    let scorers = tags
        .iter()
        .map(|t| ctx.scorer(t).map(|s| (t.clone(), s)))
        .collect::<Result<Vec<_>, _>>()?;

    let mut lines = Vec::new();
    for input in &inputs {
        if !input.exists() {
            return Err(CliError::Config(format!("missing file: {}", input.display())));
        }
        let rewrites: Vec<RewriteLine> = read_jsonl(input)?;
        let fallback = input.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        for (tag, scorer) in &scorers {
            let scores = bounded_map(&rewrites, ctx.config.generation.max_in_flight, |_, r| {
                scorer.score(&r.query, &r.response)
            });
            for (r, score) in rewrites.iter().zip(scores) {
                lines.push(ScoreLine {
                    id: r.id.clone(),
                    pair_key: pair_key(r),
                    method: r.method.clone().unwrap_or_else(|| fallback.clone()),
                    temperature: r.temperature.unwrap_or(0.0),
                    classifier: tag.clone(),
                    score: score?,
                    label: r.label,
                });
            }
        }
    }
    let n = write_jsonl(&lines, &ctx.out(SCORES_FILE))?;
    log::info!("wrote {n} scores");
    Ok(())
}

fn evaluate(common: &Common) -> Result<(), CliError> {
    let ctx = Ctx::new(common)?;
    let e = &ctx.config.evaluate;
    let files = if e.scores.is_empty() {
        vec![ctx.out(SCORES_FILE)]
    } else {
        e.scores.clone()
    };
    let mut lines: Vec<ScoreLine> = Vec::new();
    for f in &files {
        if !f.exists() {
            return Err(CliError::Config(format!("missing file: {}", f.display())));
        }
        lines.extend(read_jsonl::<ScoreLine>(f)?);
    }
    if lines.is_empty() {
        return Err(CliError::Config("no scores to evaluate".into()));
    }

    let mut columns: Vec<String> = Vec::new();
    let mut runs: Vec<ScoreRun> = Vec::new();
    for l in &lines {
        if !columns.contains(&l.classifier) {
            columns.push(l.classifier.clone());
        }
        match runs
            .iter_mut()
            .find(|r| r.method == l.method && r.temperature == l.temperature && r.classifier == l.classifier)
        {
            Some(run) => run.scores.push(l.score),
            None => runs.push(ScoreRun {
                method: l.method.clone(),
                temperature: l.temperature,
                classifier: l.classifier.clone(),
                scores: vec![l.score],
            }),
        }
    }
    let threshold = ctx.config.classify.threshold;
    let rows = rows_of(&runs);
    let matrix = build_detection_matrix(&rows, &columns, &runs, threshold)?;

    let mut prf = Vec::new();
    if let Some(path) = &ctx.config.paths.held_out {
        let held_out = load_labeled(path)?;
        let labels: Vec<Label> = held_out.iter().map(|x| x.label).collect();
        for tag in &columns {
            let scorer = ctx.scorer(tag)?;
            let preds = held_out
                .iter()
                .map(|x| scorer.score(&x.query, &x.response).map(|p| Label::from_bool(p >= threshold)))
                .collect::<Result<Vec<_>, _>>()?;
            prf.push(NamedPrf::new(tag.clone(), confusion(&preds, &labels)?));
        }
    }

    let mut wilcoxon = Vec::new();
    for row in rows.iter().filter(|r| r.method != e.baseline_method) {
        for tag in &columns {
            let pick = |method: &str| -> BTreeMap<&str, f64> {
                lines
                    .iter()
                    .filter(|l| l.method == method && l.temperature == row.temperature && &l.classifier == tag)
                    .map(|l| (l.pair_key.as_str(), l.score))
                    .collect()
            };
            let base = pick(&e.baseline_method);
            let other = pick(&row.method);
            let (a, b): (Vec<f64>, Vec<f64>) = other
                .iter()
                .filter_map(|(k, v)| base.get(k).map(|bv| (*v, *bv)))
                .unzip();
            if a.len() < 2 {
                continue;
            }
            let name = format!("{} vs {} @ {:.1} [{tag}]", row.method, e.baseline_method, row.temperature);
            match wilcoxon_signed_rank(&a, &b, e.alternative) {
                Ok(result) => wilcoxon.push(NamedWilcoxon { name, result }),
                Err(err) => log::warn!("{name}: {err}"),
            }
        }
    }

    let report = Report { matrix, prf, wilcoxon };
    let (txt, _) = render_report(&report, &ctx.output_dir)?;
    print!("{}", std::fs::read_to_string(txt)?);
    Ok(())
}

fn wilcoxon(args: &WilcoxonArgs) -> Result<(), CliError> {
    let ctx = Ctx::new(&args.common)?;
    let input = args
        .input
        .clone()
        .ok_or_else(|| CliError::Config("--input is required".into()))?;
    if !input.exists() {
        return Err(CliError::Config(format!("missing file: {}", input.display())));
    }
    let pairs: Vec<Pair> = read_jsonl(&input)?;
    let (a, b): (Vec<f64>, Vec<f64>) = pairs.iter().map(|p| (p.a, p.b)).unzip();
    let alternative = args.alternative.unwrap_or(ctx.config.evaluate.alternative);
    let result = wilcoxon_signed_rank(&a, &b, alternative)?;
    let json = serde_json::to_string_pretty(&result).map_err(std::io::Error::from)?;
    std::fs::write(ctx.out(WILCOXON_FILE), format!("{json}\n"))?;
    println!("{json}");
    Ok(())
}

/// Parses `argv` and runs the subcommand, returning the process exit code.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("adforge: {e}");
            e.exit_code()
        }
    }
}

pub fn run(command: &Command) -> Result<(), CliError> {
    match command {
        Command::Qa(c) => qa(c),
        Command::Rewrite(a) => rewrite(a),
        Command::BuildSft(c) => build_sft(c),
        Command::SynthNaive(a) => synth_naive(a),
        Command::SynthStructured(a) => synth_structured(a),
        Command::Train(a) => train(a),
        Command::Classify(c) => classify(c),
        Command::Evaluate(c) => evaluate(c),
        Command::Wilcoxon(a) => wilcoxon(a),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_defaults_and_relative_paths() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, r#"{"paths": {"topics": "t.jsonl"}, "classify": {"inputs": ["a.jsonl"]}}"#).unwrap();
        let c = RunConfig::load(&path).unwrap();
        assert_eq!(c.paths.topics, Some(dir.path().join("t.jsonl")));
        assert_eq!(c.classify.inputs, vec![dir.path().join("a.jsonl")]);
        assert_eq!(c.generation.n, 10);
        assert_eq!(c.seed, None);
    }

    #[test]
    fn unknown_config_key_is_config_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, r#"{"pathz": {}}"#).unwrap();
        assert_eq!(RunConfig::load(&path).unwrap_err().exit_code(), 3);
    }

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(dispatch(["adforge", "frobnicate"]), 2);
        assert_eq!(dispatch(["adforge"]), 2);
    }
}
