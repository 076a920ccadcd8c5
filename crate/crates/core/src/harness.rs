//! Pipeline commands over a [`RunConfig`].
//!
//! Every command reads its inputs from the run's output directory and writes
//! one artifact there. Record-per-line artifacts are resumable: questions
//! already present are skipped and a torn tail is discarded. Aggregate
//! artifacts (results, sweep, report) are recomputed in full.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value as Json};
use tracing::{info, warn};

use crate::artifact::{self, ArtifactError, Header, LineWriter, Records, HARNESS_VERSION};
use crate::corpus::{self, Benchmark, BenchmarkLayout, BenchmarkQuestion, CorpusError, SchemaText, Split};
use crate::generation::{
    self, build_pool, load_pools, render_generation_prompt, sample_candidates, CandidatePool, ChatCompletionsClient,
    CompletionBackend, GenerationConfig, GenerationError, PoolError, PoolWriter,
};
use crate::http::RetryPolicy;
use crate::labeling::{
    balance_dataset, build_labeled_dataset, label_pool, DatasetStats, LabeledExample, LabeledPool, LabelingError,
    QuestionLabels,
};
use crate::metrics::{
    n_sweep, question_eval, sweep_csv, EvaluationReport, ExcludedQuestion, MetricsError, QuestionData, SweepRow,
};
use crate::scoring::{
    binding_description, pool_requests, result_preview, score_pool, OracleLabels, PoolScores, RemoteScorer,
    ScorerBinding, ScoringError, VerificationPromptVariant,
};
use crate::selection::{derive_seed, run_strategy, SelectionOptions, SelectionResult, Strategy, DEFAULT_SEED};
use crate::sqlexec::{ExecutionDigest, Executor};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_MISSING_ARTIFACT: i32 = 3;
pub const EXIT_RUNTIME: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("missing input {}: {hint}", path.display())]
    MissingArtifact { path: PathBuf, hint: String },
    #[error("{0}")]
    Runtime(String),
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => EXIT_CONFIG,
            HarnessError::MissingArtifact { .. } => EXIT_MISSING_ARTIFACT,
            HarnessError::Runtime(_) => EXIT_RUNTIME,
        }
    }
}

macro_rules! runtime_from {
    ($($t:ty),*) => {$(
        impl From<$t> for HarnessError {
            fn from(e: $t) -> Self {
                HarnessError::Runtime(e.to_string())
            }
        }
    )*};
}

runtime_from!(
    ArtifactError,
    CorpusError,
    GenerationError,
    PoolError,
    LabelingError,
    ScoringError,
    MetricsError,
    std::io::Error
);

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetConfig {
    /// Label used in reports; defaults to `<root dir name>/<split>`.
    pub name: Option<String>,
    pub root: PathBuf,
    pub split: Split,
    pub questions_file: Option<PathBuf>,
    pub databases_dir: Option<PathBuf>,
    /// Drop repeated `(db_id, question text)` pairs.
    pub dedup: bool,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        DatasetConfig {
            name: None,
            root: PathBuf::new(),
            split: Split::Dev,
            questions_file: None,
            databases_dir: None,
            dedup: true,
        }
    }
}

impl DatasetConfig {
    pub fn label(&self) -> String {
        self.name.clone().unwrap_or_else(|| {
            let dir = self.root.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            format!("{dir}/{}", self.split)
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExecutionConfig {
    pub timeout_secs: f64,
    /// Worker threads over questions; 0 uses every core.
    pub parallelism: usize,
}

impl Default for ExecutionConfig {
    fn default() -> Self {
        ExecutionConfig { timeout_secs: 30.0, parallelism: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BindingKind {
    Remote,
    MockHash,
    Oracle,
}

impl std::str::FromStr for BindingKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "remote" => Ok(BindingKind::Remote),
            "mock-hash" => Ok(BindingKind::MockHash),
            "oracle" => Ok(BindingKind::Oracle),
            _ => Err(format!("unknown scorer `{s}` (expected remote, mock-hash or oracle)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScoringConfig {
    pub binding: BindingKind,
    pub url: String,
    /// Seed of the mock-hash binding.
    pub seed: u64,
    pub variant: VerificationPromptVariant,
    /// Restrict verifier best-of-N to candidates that executed.
    pub prefilter_executable: bool,
    pub batch_size: usize,
    pub max_in_flight: usize,
    pub retry: RetryPolicy,
}

impl Default for ScoringConfig {
    fn default() -> Self {
        ScoringConfig {
            binding: BindingKind::Remote,
            url: "http://127.0.0.1:8080".to_string(),
            seed: DEFAULT_SEED,
            variant: VerificationPromptVariant::SqlOnly,
            prefilter_executable: false,
            batch_size: 16,
            max_in_flight: 4,
            retry: RetryPolicy::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectionConfig {
    pub seed: u64,
    pub strategies: Vec<Strategy>,
    /// Let non-executable candidates form a majority-vote cluster.
    pub maj_include_errors: bool,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        SelectionConfig {
            seed: DEFAULT_SEED,
            strategies: vec![Strategy::BaselineFirst, Strategy::Majority, Strategy::ExBon, Strategy::OrmBon],
            maj_include_errors: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub n_values: Vec<usize>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig { n_values: vec![1, 2, 4, 8, 16, 32] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub dataset: DatasetConfig,
    pub generation: GenerationConfig,
    /// Replay pools from this file instead of sampling.
    pub pools_file: Option<PathBuf>,
    pub execution: ExecutionConfig,
    pub scoring: ScoringConfig,
    pub selection: SelectionConfig,
    pub sweep: SweepConfig,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            dataset: DatasetConfig::default(),
            generation: GenerationConfig::default(),
            pools_file: None,
            execution: ExecutionConfig::default(),
            scoring: ScoringConfig::default(),
            selection: SelectionConfig::default(),
            sweep: SweepConfig::default(),
            output_dir: PathBuf::from("runs/default"),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes to TOML")
    }

    /// Reads a TOML config. Relative paths in it are taken relative to the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text).map_err(|e| match e {
            HarnessError::Config(msg) => HarnessError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })?;
        cfg.resolve_paths(path.parent().unwrap_or(Path::new("")));
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let base = if base.as_os_str().is_empty() { Path::new(".") } else { base };
        let fix = |p: &mut PathBuf| {
            if p.as_os_str() == "." {
                *p = base.to_path_buf();
            } else if p.is_relative() && !p.as_os_str().is_empty() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.dataset.root);
        if let Some(p) = self.dataset.questions_file.as_mut() {
            fix(p);
        }
        if let Some(p) = self.dataset.databases_dir.as_mut() {
            fix(p);
        }
        if let Some(p) = self.pools_file.as_mut() {
            fix(p);
        }
        fix(&mut self.output_dir);
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if self.dataset.root.as_os_str().is_empty() && self.dataset.questions_file.is_none() {
            return bad("dataset.root is not set".into());
        }
        if self.output_dir.as_os_str().is_empty() {
            return bad("output_dir is not set".into());
        }
        if self.pools_file.is_none() {
            self.generation.validate().map_err(HarnessError::Config)?;
        } else if self.generation.n_candidates == 0 {
            return bad("generation.n_candidates must be >= 1".into());
        }
        if !(self.execution.timeout_secs.is_finite() && self.execution.timeout_secs > 0.0) {
            return bad(format!("execution.timeout_secs must be > 0, got {}", self.execution.timeout_secs));
        }
        if self.selection.strategies.is_empty() {
            return bad("selection.strategies is empty".into());
        }
        let unique: HashSet<_> = self.selection.strategies.iter().collect();
        if unique.len() != self.selection.strategies.len() {
            return bad("selection.strategies lists a strategy twice".into());
        }
        if self.sweep.n_values.is_empty() || self.sweep.n_values.contains(&0) {
            return bad("sweep.n_values must be non-empty and every n >= 1".into());
        }
        if self.scoring.binding == BindingKind::Remote && self.scoring.url.trim().is_empty() {
            return bad("scoring.url is required for the remote scorer".into());
        }
        if self.scoring.batch_size == 0 || self.scoring.max_in_flight == 0 {
            return bad("scoring.batch_size and scoring.max_in_flight must be >= 1".into());
        }
        Ok(())
    }

    /// The configuration recorded in artifacts. The output directory is left
    /// out so identical runs in different directories produce identical files.
    pub fn snapshot(&self) -> Json {
        let mut v = serde_json::to_value(self).expect("config serializes");
        if let Some(obj) = v.as_object_mut() {
            obj.remove("output_dir");
        }
        v
    }

    pub fn paths(&self) -> RunPaths {
        RunPaths::new(&self.output_dir)
    }

    fn timeout(&self) -> Duration {
        Duration::from_secs_f64(self.execution.timeout_secs)
    }

    fn selection_options(&self) -> SelectionOptions {
        SelectionOptions {
            maj_include_errors: self.selection.maj_include_errors,
            prefilter_executable: self.scoring.prefilter_executable,
        }
    }

    fn needs_scores(&self) -> bool {
        self.selection.strategies.contains(&Strategy::OrmBon)
    }

    fn thread_pool(&self) -> rayon::ThreadPool {
        rayon::ThreadPoolBuilder::new().num_threads(self.execution.parallelism).build().expect("thread pool")
    }
}

/// Artifact locations inside an output directory.
#[derive(Debug, Clone)]
pub struct RunPaths {
    pub pools: PathBuf,
    pub labels: PathBuf,
    pub executions: PathBuf,
    pub dataset: PathBuf,
    pub balanced: PathBuf,
    pub scores: PathBuf,
    pub selections: PathBuf,
    pub results: PathBuf,
    pub sweep: PathBuf,
    pub report: PathBuf,
}

impl RunPaths {
    pub fn new(dir: &Path) -> Self {
        RunPaths {
            pools: dir.join("pools.jsonl"),
            labels: dir.join("labels.jsonl"),
            executions: dir.join("executions.jsonl"),
            dataset: dir.join("dataset.jsonl"),
            balanced: dir.join("dataset_balanced.jsonl"),
            scores: dir.join("scores.jsonl"),
            selections: dir.join("selections.jsonl"),
            results: dir.join("results.json"),
            sweep: dir.join("sweep.csv"),
            report: dir.join("report.txt"),
        }
    }
}

/// Execution results of one pool, as saved by `label`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionExecutions {
    pub question_id: String,
    pub gold: ExecutionDigest,
    pub candidates: Vec<ExecutionDigest>,
    pub previews: Vec<String>,
}

/// One strategy's pick for a question.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selected {
    #[serde(flatten)]
    pub result: SelectionResult,
    pub sql: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionSelections {
    pub question_id: String,
    pub n: usize,
    pub selections: Vec<Selected>,
}

/// Structured results file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultsFile {
    pub harness_version: String,
    pub config: Json,
    pub report: EvaluationReport,
}

fn require(path: &Path, hint: &str) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(HarnessError::MissingArtifact { path: path.to_path_buf(), hint: hint.to_string() })
    }
}

fn header(cfg: &RunConfig, kind: &str) -> Header {
    Header::new(kind, cfg.snapshot())
}

fn load_questions(cfg: &RunConfig) -> Result<Benchmark> {
    let layout = BenchmarkLayout {
        questions_file: cfg.dataset.questions_file.clone(),
        databases_dir: cfg.dataset.databases_dir.clone(),
    };
    let mut bench = corpus::load_benchmark(&cfg.dataset.root, cfg.dataset.split, &layout).map_err(|e| match e {
        CorpusError::MissingQuestionFile { .. } | CorpusError::MissingDatabaseDir { .. } => {
            HarnessError::Config(e.to_string())
        }
        other => other.into(),
    })?;
    if cfg.dataset.dedup {
        let (kept, removed) = corpus::deduplicate_questions(std::mem::take(&mut bench.questions));
        if removed > 0 {
            tracing::debug!(removed, "dropped duplicate questions");
        }
        bench.questions = kept;
    }
    Ok(bench)
}

fn schemas_for<'a>(
    bench: &Benchmark,
    questions: impl IntoIterator<Item = &'a BenchmarkQuestion>,
) -> Result<HashMap<String, SchemaText>> {
    let mut out = HashMap::new();
    for q in questions {
        if !out.contains_key(&q.db_id) {
            let db = bench.database(&q.db_id).ok_or_else(|| HarnessError::Runtime(format!("unknown db {}", q.db_id)))?;
            out.insert(q.db_id.clone(), corpus::serialize_schema(db)?);
        }
    }
    Ok(out)
}

/// Opens a record-per-line artifact for resuming: returns the records whose
/// question ids pass `keep`, truncating the file after the last of them.
/// A missing file, or one whose header config differs from `cfg`, starts over.
fn resume_or_create<T, F>(
    cfg: &RunConfig,
    path: &Path,
    kind: &str,
    meta: Json,
    mut prefix_ok: F,
) -> Result<(LineWriter, Vec<T>)>
where
    T: serde::de::DeserializeOwned,
    F: FnMut(usize, &T) -> bool,
{
    let fresh_header = header(cfg, kind).with_meta(meta);
    if path.is_file() {
        let (parsed, bad) = artifact::read_records_lenient::<T>(path)?;
        let same_run = parsed.header.as_ref().is_some_and(|h| h.config == fresh_header.config && h.meta == fresh_header.meta);
        if same_run {
            let keep = parsed.records.iter().enumerate().take_while(|(i, r)| prefix_ok(*i, r)).count();
            if bad.is_some() || keep < parsed.records.len() {
                warn!(path = %path.display(), kept = keep, "discarding incomplete tail");
            }
            let keep_bytes = if keep == 0 { parsed.header_end } else { parsed.ends[keep - 1] };
            let mut records = parsed.records;
            records.truncate(keep);
            return Ok((LineWriter::append(path, keep_bytes)?, records));
        }
        warn!(path = %path.display(), "artifact was written with a different config; starting over");
    }
    Ok((LineWriter::create(path, &fresh_header)?, Vec::new()))
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GenerateSummary {
    pub written: usize,
    pub skipped: usize,
    pub missing: Vec<String>,
}

/// Samples pools from the configured endpoint, or replays `pools_file`.
pub fn cmd_generate(cfg: &RunConfig) -> Result<GenerateSummary> {
    cfg.validate()?;
    if cfg.pools_file.is_some() {
        return generate_with(cfg, None);
    }
    let client = ChatCompletionsClient::new(&cfg.generation)?;
    generate_with(cfg, Some(&client))
}

/// [`cmd_generate`] with an explicit completion backend (`None` replays
/// `pools_file`).
pub fn generate_with(cfg: &RunConfig, backend: Option<&dyn CompletionBackend>) -> Result<GenerateSummary> {
    cfg.validate()?;
    let bench = load_questions(cfg)?;
    let paths = cfg.paths();
    let replay: Option<HashMap<String, CandidatePool>> = match &cfg.pools_file {
        Some(p) => {
            require(p, "set pools_file to an existing pool file")?;
            let pools = load_pools(p, Some(cfg.generation.n_candidates)).map_err(|e| match e {
                PoolError::NMismatch { .. } => HarnessError::Config(format!("{}: {e}", p.display())),
                other => other.into(),
            })?;
            Some(pools.into_iter().map(|pool| (pool.question_id.clone(), pool)).collect())
        }
        None => None,
    };

    let (mut writer, done) = if paths.pools.is_file() {
        PoolWriter::resume(&paths.pools)?
    } else {
        let h = header(cfg, "pools").with_meta(json!({ "generator": cfg.generation.meta() }));
        (PoolWriter::create(&paths.pools, &h)?, HashSet::new())
    };

    let mut summary = GenerateSummary::default();
    let needed: Vec<&BenchmarkQuestion> = bench.questions.iter().filter(|q| !done.contains(&q.id)).collect();
    summary.skipped = bench.questions.len() - needed.len();
    let schemas = if backend.is_some() { schemas_for(&bench, needed.iter().copied())? } else { HashMap::new() };
    for q in needed {
        let pool = match (&replay, backend) {
            (Some(pools), _) => match pools.get(&q.id) {
                Some(p) => p.clone(),
                None => {
                    summary.missing.push(q.id.clone());
                    continue;
                }
            },
            (None, Some(backend)) => {
                let prompt = render_generation_prompt(&schemas[&q.db_id], q);
                let completions = sample_candidates(&prompt, &cfg.generation, backend)?;
                build_pool(&q.id, completions, cfg.generation.meta())
            }
            (None, None) => return Err(HarnessError::Config("no pools_file and no generation backend".into())),
        };
        writer.write(&pool)?;
        summary.written += 1;
    }
    if !summary.missing.is_empty() {
        warn!(count = summary.missing.len(), "questions have no pool in the replayed file");
    }
    info!(written = summary.written, skipped = summary.skipped, "pools ready");
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabelSummary {
    pub questions: usize,
    pub newly_labeled: usize,
    pub gold_failures: usize,
    pub stats: DatasetStats,
}

/// Executes gold and candidate queries, writes labels, execution digests
/// and the (unbalanced) verifier dataset.
pub fn cmd_label(cfg: &RunConfig) -> Result<LabelSummary> {
    cfg.validate()?;
    let paths = cfg.paths();
    require(&paths.pools, "run `generate` first")?;
    let bench = load_questions(cfg)?;
    let pools = load_pools(&paths.pools, None)?;
    let pairs = crate::labeling::pair_pools(&bench.questions, &pools)?;

    let meta = json!({ "timeout_secs": cfg.execution.timeout_secs });
    let (mut label_w, labels_done) =
        resume_or_create::<QuestionLabels, _>(cfg, &paths.labels, "labels", meta.clone(), |i, r| {
            pairs.get(i).is_some_and(|(q, _)| q.id == r.question_id)
        })?;
    let (mut exec_w, execs_done) =
        resume_or_create::<QuestionExecutions, _>(cfg, &paths.executions, "executions", meta, |i, r| {
            labels_done.get(i).is_some_and(|l| l.question_id == r.question_id)
        })?;
    let done = execs_done.len();
    if labels_done.len() > done {
        // Labels ran ahead of executions; drop the extra lines.
        let (parsed, _) = artifact::read_records_lenient::<QuestionLabels>(&paths.labels)?;
        let keep_bytes = if done == 0 { parsed.header_end } else { parsed.ends[done - 1] };
        label_w = LineWriter::append(&paths.labels, keep_bytes)?;
    }

    let todo = &pairs[done..];
    let tp = cfg.thread_pool();
    let chunk = tp.current_num_threads().max(1) * 4;
    for batch in todo.chunks(chunk) {
        let results: Vec<(QuestionLabels, QuestionExecutions)> = tp.install(|| {
            batch
                .par_iter()
                .map(|(q, pool)| label_one(&bench, cfg.timeout(), q, pool))
                .collect::<Result<Vec<_>>>()
        })?;
        for (labels, execs) in results {
            label_w.write_group(std::slice::from_ref(&labels))?;
            exec_w.write_group(std::slice::from_ref(&execs))?;
        }
    }

    let labels: Records<QuestionLabels> = artifact::read_records(&paths.labels)?;
    let execs: Records<QuestionExecutions> = artifact::read_records(&paths.executions)?;
    let gold_failures = labels.records.iter().filter(|l| !l.gold_ok()).count();
    let stats = write_dataset(cfg, &bench, &pools, &labels.records, &execs.records)?;
    info!(questions = labels.records.len(), gold_failures, examples = stats.n_examples, "labeling done");
    Ok(LabelSummary { questions: labels.records.len(), newly_labeled: todo.len(), gold_failures, stats })
}

fn label_one(
    bench: &Benchmark,
    timeout: Duration,
    q: &BenchmarkQuestion,
    pool: &CandidatePool,
) -> Result<(QuestionLabels, QuestionExecutions)> {
    // Per-question cache: repeated candidates within a pool run once.
    let executor = Executor::new(timeout);
    let db = bench.database(&q.db_id).ok_or_else(|| HarnessError::Runtime(format!("unknown db {}", q.db_id)))?;
    let gold = executor.execute(db, &q.gold_sql);
    let outcomes: Vec<_> = pool.candidates.iter().map(|c| executor.execute(db, &c.sql)).collect();
    let labels = label_pool(q, pool, &gold, &outcomes)?;
    let execs = QuestionExecutions {
        question_id: q.id.clone(),
        gold: gold.digest(),
        candidates: outcomes.iter().map(|o| o.digest()).collect(),
        previews: outcomes.iter().map(|o| result_preview(o)).collect(),
    };
    Ok((labels, execs))
}

fn write_dataset(
    cfg: &RunConfig,
    bench: &Benchmark,
    pools: &[CandidatePool],
    labels: &[QuestionLabels],
    execs: &[QuestionExecutions],
) -> Result<DatasetStats> {
    let questions: HashMap<&str, &BenchmarkQuestion> = bench.questions.iter().map(|q| (q.id.as_str(), q)).collect();
    let pools: HashMap<&str, &CandidatePool> = pools.iter().map(|p| (p.question_id.as_str(), p)).collect();
    let execs: HashMap<&str, &QuestionExecutions> = execs.iter().map(|e| (e.question_id.as_str(), e)).collect();
    let labeled: Vec<&QuestionLabels> = labels.iter().filter(|l| l.gold_ok()).collect();
    let schemas = schemas_for(bench, labeled.iter().filter_map(|l| questions.get(l.question_id.as_str()).copied()))?;
    let items: Vec<LabeledPool<'_>> = labeled
        .iter()
        .map(|l| {
            let id = l.question_id.as_str();
            let q = questions[id];
            LabeledPool {
                question: q,
                schema: &schemas[&q.db_id],
                pool: pools[id],
                labels: l,
                previews: execs.get(id).map(|e| e.previews.as_slice()),
            }
        })
        .collect();
    let (examples, stats) = build_labeled_dataset(&items, cfg.scoring.variant);
    let h = header(cfg, "dataset").with_meta(serde_json::to_value(&stats).expect("stats serialize"));
    let mut w = LineWriter::create(&cfg.paths().dataset, &h)?;
    w.write_group(&examples)?;
    Ok(stats)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BalanceSummary {
    pub before: DatasetStats,
    pub after: DatasetStats,
}

pub fn cmd_balance(cfg: &RunConfig) -> Result<BalanceSummary> {
    cfg.validate()?;
    let paths = cfg.paths();
    require(&paths.dataset, "run `label` first")?;
    let examples: Vec<LabeledExample> = artifact::read_records(&paths.dataset)?.records;
    let balanced = balance_dataset(&examples);
    let before = DatasetStats::from_examples(&examples);
    let after = DatasetStats::from_examples(&balanced);
    let h = header(cfg, "dataset_balanced").with_meta(json!({ "before": before, "after": after }));
    let mut w = LineWriter::create(&paths.balanced, &h)?;
    w.write_group(&balanced)?;
    info!(before = before.n_examples, after = after.n_examples, "balanced dataset written");
    Ok(BalanceSummary { before, after })
}

fn load_labels(cfg: &RunConfig) -> Result<Vec<QuestionLabels>> {
    let p = cfg.paths().labels;
    require(&p, "run `label` first")?;
    Ok(artifact::read_records(&p)?.records)
}

fn load_executions(cfg: &RunConfig) -> Result<Vec<QuestionExecutions>> {
    let p = cfg.paths().executions;
    require(&p, "run `label` first")?;
    Ok(artifact::read_records(&p)?.records)
}

/// Builds the configured scorer. The oracle reads `labels`.
pub fn build_binding(cfg: &RunConfig, labels: &[QuestionLabels]) -> Result<ScorerBinding> {
    Ok(match cfg.scoring.binding {
        BindingKind::Oracle => ScorerBinding::Oracle(OracleLabels::from_question_labels(labels)),
        BindingKind::MockHash => ScorerBinding::MockHash { seed: cfg.scoring.seed },
        BindingKind::Remote => {
            let mut remote = RemoteScorer::new(cfg.scoring.url.clone(), cfg.scoring.retry.clone())?;
            remote.batch_size = cfg.scoring.batch_size;
            remote.max_in_flight = cfg.scoring.max_in_flight;
            ScorerBinding::Remote(remote)
        }
    })
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ScoreSummary {
    pub scored: usize,
    pub skipped: usize,
}

/// Verifier scores for every candidate of every question whose gold executed.
pub fn cmd_score(cfg: &RunConfig) -> Result<ScoreSummary> {
    cfg.validate()?;
    let paths = cfg.paths();
    require(&paths.pools, "run `generate` first")?;
    let labels = load_labels(cfg)?;
    let execs = load_executions(cfg)?;
    let bench = load_questions(cfg)?;
    let pools: HashMap<String, CandidatePool> =
        load_pools(&paths.pools, None)?.into_iter().map(|p| (p.question_id.clone(), p)).collect();
    let questions: HashMap<&str, &BenchmarkQuestion> = bench.questions.iter().map(|q| (q.id.as_str(), q)).collect();
    let binding = build_binding(cfg, &labels)?;
    if let ScorerBinding::Remote(remote) = &binding {
        let health = remote.health()?;
        info!(model = %health.model_name, status = %health.status, "scorer reachable");
    }

    let execs: HashMap<&str, &QuestionExecutions> = execs.iter().map(|e| (e.question_id.as_str(), e)).collect();
    let todo = labels
        .iter()
        .filter(|l| l.gold_ok())
        .map(|l| {
            execs.get(l.question_id.as_str()).map(|e| (l, *e)).ok_or_else(|| {
                HarnessError::Runtime(format!("{}: no execution record; rerun `label`", l.question_id))
            })
        })
        .collect::<Result<Vec<(&QuestionLabels, &QuestionExecutions)>>>()?;
    let meta = json!({ "binding": binding_description(&binding), "variant": cfg.scoring.variant });
    let (mut w, done) = resume_or_create::<PoolScores, _>(cfg, &paths.scores, "scores", meta, |i, r| {
        todo.get(i).is_some_and(|(l, _)| l.question_id == r.question_id)
    })?;
    let schemas = schemas_for(&bench, todo.iter().filter_map(|(l, _)| questions.get(l.question_id.as_str()).copied()))?;

    let mut summary = ScoreSummary { scored: 0, skipped: done.len() };
    for (l, e) in &todo[done.len()..] {
        let q = questions
            .get(l.question_id.as_str())
            .ok_or_else(|| HarnessError::Runtime(format!("labels mention unknown question {}", l.question_id)))?;
        let pool = pools
            .get(&l.question_id)
            .ok_or_else(|| HarnessError::Runtime(format!("no pool for {}", l.question_id)))?;
        let sqls: Vec<&str> = pool.candidates.iter().map(|c| c.sql.as_str()).collect();
        let requests = pool_requests(
            &q.id,
            &schemas[&q.db_id].ddl,
            &generation::question_with_evidence(q),
            &sqls,
            Some(&e.previews),
            cfg.scoring.variant,
        );
        let scores = score_pool(&binding, &requests)?;
        let record = PoolScores {
            question_id: q.id.clone(),
            variant: cfg.scoring.variant,
            p_yes: scores.iter().map(|s| s.p_yes).collect(),
        };
        w.write_group(std::slice::from_ref(&record))?;
        summary.scored += 1;
    }
    info!(scored = summary.scored, skipped = summary.skipped, "scores ready");
    Ok(summary)
}

/// Everything evaluation needs, joined by question id in labels order.
struct Joined {
    data: Vec<QuestionData>,
    excluded: Vec<ExcludedQuestion>,
    pool_len: usize,
}

fn join_inputs(cfg: &RunConfig) -> Result<Joined> {
    let labels = load_labels(cfg)?;
    let execs = load_executions(cfg)?;
    let scores: HashMap<String, Vec<f64>> = if cfg.needs_scores() {
        let p = cfg.paths().scores;
        require(&p, "run `score` first")?;
        artifact::read_records::<PoolScores>(&p)?.records.into_iter().map(|s| (s.question_id, s.p_yes)).collect()
    } else {
        HashMap::new()
    };
    let bench = load_questions(cfg)?;
    let difficulty: HashMap<&str, corpus::Difficulty> =
        bench.questions.iter().map(|q| (q.id.as_str(), q.difficulty)).collect();
    let execs: HashMap<&str, &QuestionExecutions> = execs.iter().map(|e| (e.question_id.as_str(), e)).collect();

    let mut data = Vec::new();
    let mut excluded = Vec::new();
    let mut pool_len: Option<usize> = None;
    for l in labels {
        if let Some(reason) = l.gold_error {
            excluded.push(ExcludedQuestion { question_id: l.question_id, reason });
            continue;
        }
        let e = execs
            .get(l.question_id.as_str())
            .ok_or_else(|| HarnessError::Runtime(format!("{}: no execution record", l.question_id)))?;
        let s = if cfg.needs_scores() {
            scores.get(&l.question_id).cloned().ok_or_else(|| HarnessError::MissingArtifact {
                path: cfg.paths().scores,
                hint: format!("no scores for {}; rerun `score`", l.question_id),
            })?
        } else {
            vec![0.0; l.labels.len()]
        };
        match pool_len {
            None => pool_len = Some(l.labels.len()),
            Some(n) if n != l.labels.len() => {
                return Err(HarnessError::Runtime(format!(
                    "{} has {} candidates, other pools have {n}",
                    l.question_id,
                    l.labels.len()
                )))
            }
            _ => {}
        }
        data.push(QuestionData {
            difficulty: difficulty.get(l.question_id.as_str()).copied().unwrap_or(corpus::Difficulty::Unknown),
            question_id: l.question_id,
            labels: l.labels,
            outcomes: e.candidates.clone(),
            scores: s,
        });
    }
    if data.is_empty() {
        return Err(HarnessError::Runtime("no question with an executable gold query".into()));
    }
    Ok(Joined { data, excluded, pool_len: pool_len.unwrap_or(0) })
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SelectSummary {
    pub selected: usize,
    pub skipped: usize,
}

/// Runs every configured strategy on each full pool and records the picks.
pub fn cmd_select(cfg: &RunConfig) -> Result<SelectSummary> {
    cfg.validate()?;
    let paths = cfg.paths();
    require(&paths.pools, "run `generate` first")?;
    let joined = join_inputs(cfg)?;
    let pools: HashMap<String, CandidatePool> =
        load_pools(&paths.pools, None)?.into_iter().map(|p| (p.question_id.clone(), p)).collect();
    let (mut w, done) =
        resume_or_create::<QuestionSelections, _>(cfg, &paths.selections, "selections", Json::Null, |i, r| {
            joined.data.get(i).is_some_and(|q| q.question_id == r.question_id)
        })?;
    let opts = cfg.selection_options();
    let mut summary = SelectSummary { selected: 0, skipped: done.len() };
    for q in &joined.data[done.len()..] {
        let n = q.pool_len();
        let seed = derive_seed(cfg.selection.seed, n, &q.question_id);
        let scores: Vec<_> = q
            .scores
            .iter()
            .enumerate()
            .map(|(i, &p_yes)| crate::scoring::CandidateScore { candidate_index: i, p_yes })
            .collect();
        let pool = &pools[&q.question_id];
        let selections = cfg
            .selection
            .strategies
            .iter()
            .map(|&s| {
                let result = run_strategy(s, &q.outcomes, &scores, seed, opts)
                    .map_err(|e| HarnessError::Runtime(format!("{}: {e}", q.question_id)))?;
                let sql = pool.candidates[result.chosen_index].sql.clone();
                Ok(Selected { result, sql })
            })
            .collect::<Result<Vec<_>>>()?;
        w.write_group(&[QuestionSelections { question_id: q.question_id.clone(), n, selections }])?;
        summary.selected += 1;
    }
    Ok(summary)
}

/// EX per strategy and Pass@N on the full pools; writes the results file.
pub fn cmd_evaluate(cfg: &RunConfig) -> Result<EvaluationReport> {
    cfg.validate()?;
    let joined = join_inputs(cfg)?;
    let n = joined.pool_len;
    let evals = joined
        .data
        .iter()
        .map(|q| question_eval(q, n, &cfg.selection.strategies, cfg.selection.seed, cfg.selection_options()))
        .collect::<Result<Vec<_>, _>>()?;
    let report = EvaluationReport::build(&cfg.dataset.label(), n, &cfg.selection.strategies, evals, joined.excluded)?;
    let file = ResultsFile { harness_version: HARNESS_VERSION.to_string(), config: cfg.snapshot(), report };
    let mut text = serde_json::to_string_pretty(&file).expect("results serialize");
    text.push('\n');
    write_file(&cfg.paths().results, &text)?;
    Ok(file.report)
}

/// EX and Pass@n for each `sweep.n_values` entry on pool prefixes.
pub fn cmd_sweep(cfg: &RunConfig) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    let joined = join_inputs(cfg)?;
    if let Some(&n) = cfg.sweep.n_values.iter().find(|&&n| n > joined.pool_len) {
        return Err(HarnessError::Config(format!(
            "sweep.n_values contains {n}, but pools have only {} candidates",
            joined.pool_len
        )));
    }
    let rows = n_sweep(
        &joined.data,
        &cfg.sweep.n_values,
        &cfg.selection.strategies,
        cfg.selection.seed,
        cfg.selection_options(),
    )?;
    let comments = vec![
        format!("harness_version: {HARNESS_VERSION}"),
        format!("config: {}", cfg.snapshot()),
    ];
    write_file(&cfg.paths().sweep, &sweep_csv(&rows, &comments))?;
    Ok(rows)
}

/// Human-readable report from the results file (and sweep, when present).
pub fn cmd_report(cfg: &RunConfig) -> Result<String> {
    cfg.validate()?;
    let paths = cfg.paths();
    require(&paths.results, "run `evaluate` first")?;
    let text = fs::read_to_string(&paths.results)?;
    let file: ResultsFile = serde_json::from_str(&text)
        .map_err(|e| HarnessError::Runtime(format!("{}: {e}", paths.results.display())))?;
    let mut out = format!("harness {}\n", file.harness_version);
    out.push_str(&file.report.render_table());
    if paths.sweep.is_file() {
        out.push_str("\nN-sweep (EX %, prefix of each pool)\n");
        out.push_str(&render_sweep(&fs::read_to_string(&paths.sweep)?));
    }
    write_file(&paths.report, &out)?;
    Ok(out)
}

fn render_sweep(csv_text: &str) -> String {
    let body: String = csv_text.lines().filter(|l| !l.starts_with('#')).map(|l| format!("{l}\n")).collect();
    let mut reader = csv::Reader::from_reader(body.as_bytes());
    let mut table: BTreeMap<usize, Vec<(String, String)>> = BTreeMap::new();
    let mut pass: BTreeMap<usize, String> = BTreeMap::new();
    let mut order: Vec<String> = Vec::new();
    for rec in reader.records().flatten() {
        let n: usize = rec[0].parse().unwrap_or(0);
        let strategy = rec[1].to_string();
        if !order.contains(&strategy) {
            order.push(strategy.clone());
        }
        table.entry(n).or_default().push((strategy, rec[2].to_string()));
        pass.insert(n, rec[6].to_string());
    }
    let mut out = format!("{:>4}", "n");
    for s in &order {
        out.push_str(&format!(" {s:>14}"));
    }
    out.push_str(&format!(" {:>14}\n", "pass@n"));
    for (n, cells) in &table {
        out.push_str(&format!("{n:>4}"));
        for s in &order {
            let v = cells.iter().find(|(name, _)| name == s).map(|(_, v)| v.as_str()).unwrap_or("");
            out.push_str(&format!(" {v:>14}"));
        }
        out.push_str(&format!(" {:>14}\n", pass[n]));
    }
    out
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, text)?;
    Ok(())
}

/// Every stage in order; scoring is skipped when no strategy reads scores.
pub fn cmd_run(cfg: &RunConfig) -> Result<String> {
    cmd_generate(cfg)?;
    cmd_label(cfg)?;
    cmd_balance(cfg)?;
    if cfg.needs_scores() {
        cmd_score(cfg)?;
    }
    cmd_select(cfg)?;
    cmd_evaluate(cfg)?;
    cmd_sweep(cfg)?;
    cmd_report(cfg)
}
