//! Verification prompts and correctness scores in `[0, 1]`.
//!
//! A [`ScorerBinding`] is the source of scores: a remote verifier service,
//! a keyed-hash mock, or an oracle reading execution labels.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use reqwest::blocking::Client;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value as Json};
use sha2::{Digest, Sha256};

use crate::http::{self, HttpError, RetryPolicy};
use crate::labeling::{Label, QuestionLabels};
use crate::sqlexec::ExecutionOutcome;

pub const PREVIEW_MAX_ROWS: usize = 20;
pub const ERROR_PREVIEW_MAX_CHARS: usize = 512;
/// Allowed deviation of `p_yes + p_no` from 1 in service responses.
pub const PROBABILITY_SUM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum VerificationPromptVariant {
    #[default]
    SqlOnly,
    DataOnly,
    DataPlusSql,
    Instruction,
}

impl VerificationPromptVariant {
    pub const ALL: [VerificationPromptVariant; 4] = [
        VerificationPromptVariant::SqlOnly,
        VerificationPromptVariant::DataOnly,
        VerificationPromptVariant::DataPlusSql,
        VerificationPromptVariant::Instruction,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            VerificationPromptVariant::SqlOnly => "sql-only",
            VerificationPromptVariant::DataOnly => "data-only",
            VerificationPromptVariant::DataPlusSql => "data-plus-sql",
            VerificationPromptVariant::Instruction => "instruction",
        }
    }

    /// Variants whose template has a data slot.
    pub fn uses_result_preview(self) -> bool {
        !matches!(self, VerificationPromptVariant::SqlOnly)
    }

    /// Variants that cannot be rendered without a preview.
    pub fn requires_result_preview(self) -> bool {
        matches!(self, VerificationPromptVariant::DataOnly | VerificationPromptVariant::DataPlusSql)
    }
}

impl fmt::Display for VerificationPromptVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for VerificationPromptVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| format!("unknown prompt variant `{s}` (expected sql-only, data-only, data-plus-sql or instruction)"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRequest {
    pub question_id: String,
    pub candidate_index: usize,
    pub schema_ddl: String,
    pub question_text: String,
    pub candidate_sql: String,
    pub result_preview: Option<String>,
    pub variant: VerificationPromptVariant,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CandidateScore {
    pub candidate_index: usize,
    pub p_yes: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum ScoringError {
    #[error("prompt variant {variant} needs a result preview (candidate {candidate_index})")]
    MissingPreview { variant: VerificationPromptVariant, candidate_index: usize },
    #[error("oracle has no label for {question_id} candidate {candidate_index}")]
    MissingLabel { question_id: String, candidate_index: usize },
    #[error(transparent)]
    Http(#[from] HttpError),
    #[error("scorer returned invalid scores: {0}")]
    InvalidResponse(String),
    #[error("cannot score an empty pool")]
    EmptyPool,
}

/// Text for the data slot of a verification prompt.
pub fn result_preview(outcome: &ExecutionOutcome) -> String {
    match outcome {
        ExecutionOutcome::Ok(rs) => rs.preview(PREVIEW_MAX_ROWS),
        ExecutionOutcome::Error(msg) => {
            format!("EXECUTION ERROR: {msg}").chars().take(ERROR_PREVIEW_MAX_CHARS).collect()
        }
        ExecutionOutcome::Timeout => "EXECUTION ERROR: timeout".to_string(),
    }
}

fn schema_and_question(req: &ScoreRequest) -> String {
    format!("{}\n\n{}", req.schema_ddl, req.question_text)
}

pub fn render_verification_prompt(req: &ScoreRequest) -> Result<String, ScoringError> {
    if req.variant.requires_result_preview() && req.result_preview.is_none() {
        return Err(ScoringError::MissingPreview { variant: req.variant, candidate_index: req.candidate_index });
    }
    let sq = schema_and_question(req);
    let sql = &req.candidate_sql;
    let data = req.result_preview.as_deref().unwrap_or("");
    Ok(match req.variant {
        VerificationPromptVariant::SqlOnly => format!("Question: {sq}\nSQL: {sql}\nIs the SQL correct?"),
        VerificationPromptVariant::DataOnly => format!(
            "Question: {sq}\nData retrieved: {data}\nBased on data and question, in your opinion is the SQL correct?"
        ),
        VerificationPromptVariant::DataPlusSql => {
            format!("Question: {sq}\nData: {data}\nSQL: {sql}\nIs the SQL correct?")
        }
        VerificationPromptVariant::Instruction => format!(
            "You are an expert SQL evaluator. Given a database schema, a question, the SQL query and data returned, \
determine if the SQL query correctly answers the question based on the schema. Respond only with Yes or No.
Input:

Question and database schema: {sq}
- SQL Query: {sql}
- Data returned: {data}

Instructions:
1. Analyze the database schema to understand the table structure, columns, and relationships.
2. Evaluate the provided SQL query against the question to determine if it accurately retrieves the intended data.
3. Respond solely with Yes if the SQL query is correct, or No if it is incorrect.
Output:
Yes
or
No
Is the SQL correct?"
        ),
    })
}

/// Labels keyed by `(question_id, candidate_index)`.
#[derive(Debug, Clone, Default)]
pub struct OracleLabels(HashMap<(String, usize), Label>);

impl OracleLabels {
    pub fn from_question_labels<'a>(items: impl IntoIterator<Item = &'a QuestionLabels>) -> Self {
        let mut map = HashMap::new();
        for q in items {
            for (i, l) in q.labels.iter().enumerate() {
                map.insert((q.question_id.clone(), i), *l);
            }
        }
        OracleLabels(map)
    }

    pub fn get(&self, question_id: &str, index: usize) -> Option<Label> {
        self.0.get(&(question_id.to_string(), index)).copied()
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
struct WireScore {
    p_yes: f64,
    p_no: f64,
}

impl WireScore {
    fn validate(self) -> Result<f64, ScoringError> {
        let in_range = |p: f64| (0.0..=1.0).contains(&p);
        if !in_range(self.p_yes) || !in_range(self.p_no) {
            return Err(ScoringError::InvalidResponse(format!("probabilities out of [0,1]: {self:?}")));
        }
        if (self.p_yes + self.p_no - 1.0).abs() > PROBABILITY_SUM_TOLERANCE {
            return Err(ScoringError::InvalidResponse(format!("p_yes + p_no != 1: {self:?}")));
        }
        Ok(self.p_yes)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServiceHealth {
    pub status: String,
    pub model_name: String,
}

/// Client for a verifier service speaking the `/score`, `/score_batch`,
/// `/health` contract.
#[derive(Debug, Clone)]
pub struct RemoteScorer {
    base_url: String,
    client: Client,
    retry: RetryPolicy,
    pub batch_size: usize,
    pub max_in_flight: usize,
}

impl RemoteScorer {
    pub fn new(base_url: impl Into<String>, retry: RetryPolicy) -> Result<Self, ScoringError> {
        Ok(RemoteScorer {
            base_url: base_url.into(),
            client: http::build_client(&retry)?,
            retry,
            batch_size: 16,
            max_in_flight: 4,
        })
    }

    pub fn health(&self) -> Result<ServiceHealth, ScoringError> {
        let url = http::join_url(&self.base_url, "health");
        let v = http::get_json(&self.client, &url, &self.retry)?;
        serde_json::from_value(v).map_err(|e| ScoringError::InvalidResponse(e.to_string()))
    }

    pub fn score(&self, prompt: &str) -> Result<f64, ScoringError> {
        let url = http::join_url(&self.base_url, "score");
        let v = http::post_json(&self.client, &url, &json!({ "prompt": prompt }), None, &self.retry)?;
        let s: WireScore = serde_json::from_value(v).map_err(|e| ScoringError::InvalidResponse(e.to_string()))?;
        s.validate()
    }

    pub fn score_batch(&self, prompts: &[String]) -> Result<Vec<f64>, ScoringError> {
        let url = http::join_url(&self.base_url, "score_batch");
        let v = http::post_json(&self.client, &url, &json!({ "prompts": prompts }), None, &self.retry)?;
        let scores: Vec<WireScore> = v
            .get("scores")
            .cloned()
            .map(serde_json::from_value)
            .transpose()
            .map_err(|e| ScoringError::InvalidResponse(e.to_string()))?
            .ok_or_else(|| ScoringError::InvalidResponse("missing `scores`".into()))?;
        if scores.len() != prompts.len() {
            return Err(ScoringError::InvalidResponse(format!(
                "{} scores for {} prompts",
                scores.len(),
                prompts.len()
            )));
        }
        scores.into_iter().map(WireScore::validate).collect()
    }
}

#[derive(Debug, Clone)]
pub enum ScorerBinding {
    Remote(RemoteScorer),
    MockHash { seed: u64 },
    Oracle(OracleLabels),
}

/// Deterministic pseudo-score in `[0, 1)` from SHA-256 of
/// `(seed, question_id, sql)`.
pub fn mock_hash_score(seed: u64, question_id: &str, sql: &str) -> f64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update([0]);
    h.update(question_id.as_bytes());
    h.update([0]);
    h.update(sql.as_bytes());
    let digest = h.finalize();
    let word = u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"));
    (word >> 11) as f64 / (1u64 << 53) as f64
}

impl ScorerBinding {
    fn local_score(&self, req: &ScoreRequest) -> Option<Result<f64, ScoringError>> {
        match self {
            ScorerBinding::Remote(_) => None,
            ScorerBinding::MockHash { seed } => Some(Ok(mock_hash_score(*seed, &req.question_id, &req.candidate_sql))),
            ScorerBinding::Oracle(labels) => Some(
                labels
                    .get(&req.question_id, req.candidate_index)
                    .map(|l| if l == Label::Correct { 1.0 } else { 0.0 })
                    .ok_or_else(|| ScoringError::MissingLabel {
                        question_id: req.question_id.clone(),
                        candidate_index: req.candidate_index,
                    }),
            ),
        }
    }
}

pub fn score_candidate(binding: &ScorerBinding, req: &ScoreRequest) -> Result<CandidateScore, ScoringError> {
    let p_yes = match binding.local_score(req) {
        Some(r) => r?,
        None => {
            let ScorerBinding::Remote(remote) = binding else { unreachable!() };
            remote.score(&render_verification_prompt(req)?)?
        }
    };
    Ok(CandidateScore { candidate_index: req.candidate_index, p_yes })
}

/// Scores every request (one per candidate, in pool order). Remote bindings
/// send `/score_batch` calls of `batch_size` prompts with at most
/// `max_in_flight` outstanding.
pub fn score_pool(binding: &ScorerBinding, requests: &[ScoreRequest]) -> Result<Vec<CandidateScore>, ScoringError> {
    if requests.is_empty() {
        return Err(ScoringError::EmptyPool);
    }
    let ScorerBinding::Remote(remote) = binding else {
        return requests.iter().map(|r| score_candidate(binding, r)).collect();
    };
    let prompts = requests.iter().map(render_verification_prompt).collect::<Result<Vec<_>, _>>()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(remote.max_in_flight.max(1))
        .build()
        .expect("thread pool");
    let chunks: Vec<Vec<f64>> = pool.install(|| {
        prompts
            .par_chunks(remote.batch_size.max(1))
            .map(|chunk| remote.score_batch(chunk))
            .collect::<Result<_, _>>()
    })?;
    Ok(chunks
        .into_iter()
        .flatten()
        .zip(requests)
        .map(|(p_yes, r)| CandidateScore { candidate_index: r.candidate_index, p_yes })
        .collect())
}

/// Builds score requests for a pool. Previews are attached for variants with
/// a data slot; `previews` may be `None` for [`VerificationPromptVariant::SqlOnly`].
pub fn pool_requests(
    question_id: &str,
    schema_ddl: &str,
    question_text: &str,
    sqls: &[&str],
    previews: Option<&[String]>,
    variant: VerificationPromptVariant,
) -> Vec<ScoreRequest> {
    sqls.iter()
        .enumerate()
        .map(|(i, sql)| ScoreRequest {
            question_id: question_id.to_string(),
            candidate_index: i,
            schema_ddl: schema_ddl.to_string(),
            question_text: question_text.to_string(),
            candidate_sql: sql.to_string(),
            result_preview: if variant.uses_result_preview() {
                previews.and_then(|p| p.get(i)).cloned()
            } else {
                None
            },
            variant,
        })
        .collect()
}

/// Serialized form of a pool's scores in the scores artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolScores {
    pub question_id: String,
    pub variant: VerificationPromptVariant,
    pub p_yes: Vec<f64>,
}

pub(crate) fn binding_description(binding: &ScorerBinding) -> Json {
    match binding {
        ScorerBinding::Remote(r) => json!({"kind": "remote", "url": r.base_url}),
        ScorerBinding::MockHash { seed } => json!({"kind": "mock-hash", "seed": seed}),
        ScorerBinding::Oracle(_) => json!({"kind": "oracle"}),
    }
}
