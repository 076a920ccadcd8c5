//! Candidate pools: the zero-shot chain-of-thought generation prompt, a
//! chat-completions sampling client, SQL extraction from completions, and the
//! record-per-line pool file.

use std::collections::HashSet;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::artifact::{self, ArtifactError, Header, LineWriter, HARNESS_VERSION};
use crate::corpus::{BenchmarkQuestion, SchemaText};
use crate::http::{self, HttpError, RetryPolicy};

const GENERATION_TEMPLATE: &str = "You are a data science expert. Below, you are provided with a database schema and a natural language question. Your task is to understand the schema and generate a valid SQL query to answer the question.

Database Engine: SQLite

Database Schema: {db_details}
This schema describes the database\u{2019}s structure, including tables, columns, primary keys, foreign keys, and any relevant relationships or constraints.

Question: {question}

Instructions:
- Make sure you only output the information that is asked in the question. If the question asks for a specific column, make sure to only include that column in the SELECT clause, nothing more.
- The generated query should return all of the information asked in the question without any missing or extra information.
- Before generating the final SQL query, please think through the steps of how to write the query.

Output Format:
In your answer, please enclose the generated SQL query in a code block:
```
Your SQL query
```

Take a deep breath and think step by step to find the correct SQL query.";

/// Question text as shown to models: the question, then the evidence hint on
/// its own line when the benchmark provides one.
pub fn question_with_evidence(q: &BenchmarkQuestion) -> String {
    if q.evidence.trim().is_empty() {
        q.text.clone()
    } else {
        format!("{}\n{}", q.text, q.evidence.trim())
    }
}

pub fn render_generation_prompt(schema: &SchemaText, question: &BenchmarkQuestion) -> String {
    debug_assert_eq!(schema.db_id, question.db_id);
    GENERATION_TEMPLATE
        .replacen("{db_details}", &schema.ddl, 1)
        .replacen("{question}", &question_with_evidence(question), 1)
}

const SQL_KEYWORDS: &[&str] = &[
    "SELECT", "WITH", "VALUES", "INSERT", "UPDATE", "DELETE", "CREATE", "DROP", "ALTER", "PRAGMA", "EXPLAIN",
    "REPLACE",
];

fn starts_with_keyword(sql: &str) -> bool {
    let head: String = sql.trim_start().chars().take_while(|c| c.is_ascii_alphabetic()).collect();
    SQL_KEYWORDS.iter().any(|k| head.eq_ignore_ascii_case(k))
}

/// Bare SQL from a chain-of-thought completion.
///
/// Takes the last fenced code block verbatim (language tag ignored). Without fences,
/// falls back to the last upper-case `SELECT`/`WITH` statement. Returns an
/// empty string when nothing usable is found.
pub fn extract_sql(raw_completion: &str) -> String {
    if raw_completion.contains("```") {
        return last_fenced_block(raw_completion).unwrap_or_default();
    }
    last_bare_statement(raw_completion).unwrap_or_default()
}

fn last_fenced_block(text: &str) -> Option<String> {
    let parts: Vec<&str> = text.split("```").collect();
    // parts[1], parts[3], ... are block bodies; an unclosed final fence still
    // counts as a block running to the end of the text.
    let body = parts.iter().skip(1).step_by(2).last()?;
    let content = match body.split_once('\n') {
        Some((tag, rest)) if !tag.trim().contains(char::is_whitespace) && !starts_with_keyword(tag) => rest,
        _ => body,
    };
    let trimmed = content.trim();
    (!trimmed.is_empty()).then(|| trimmed.to_string())
}

fn last_bare_statement(text: &str) -> Option<String> {
    let bytes = text.as_bytes();
    let mut pos = 0;
    let mut last = None;
    while pos < bytes.len() {
        let Some(start) = next_statement_start(text, pos) else { break };
        let end = statement_end(text, start);
        let stmt = text[start..end].trim();
        if !stmt.is_empty() {
            last = Some(stmt.to_string());
        }
        pos = end.max(start + 1);
    }
    last
}

fn next_statement_start(text: &str, from: usize) -> Option<usize> {
    let bytes = text.as_bytes();
    let mut i = from;
    while i < bytes.len() {
        for kw in ["SELECT", "WITH"] {
            if text[i..].starts_with(kw) {
                let before_ok = i == 0 || !(bytes[i - 1].is_ascii_alphanumeric() || bytes[i - 1] == b'_');
                let after = i + kw.len();
                let after_ok = after >= bytes.len() || !(bytes[after].is_ascii_alphanumeric() || bytes[after] == b'_');
                if before_ok && after_ok {
                    return Some(i);
                }
            }
        }
        i += text[i..].chars().next().map_or(1, char::len_utf8);
    }
    None
}

/// End of the statement starting at `start`: just past the first `;` at
/// parenthesis depth 0 outside quotes, a blank line, or end of text.
fn statement_end(text: &str, start: usize) -> usize {
    let mut depth = 0i32;
    let mut quote: Option<char> = None;
    let mut prev_newline = false;
    for (off, c) in text[start..].char_indices() {
        let at = start + off;
        if let Some(q) = quote {
            if c == q {
                quote = None;
            }
            continue;
        }
        match c {
            '\'' | '"' | '`' => quote = Some(c),
            '(' => depth += 1,
            ')' => depth -= 1,
            ';' if depth <= 0 => return at + 1,
            '\n' if prev_newline => return at,
            _ => {}
        }
        if c == '\n' {
            prev_newline = true;
        } else if !c.is_whitespace() {
            prev_newline = false;
        }
    }
    text.len()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenerationConfig {
    pub n_candidates: usize,
    pub temperature: f64,
    pub max_tokens: u32,
    pub endpoint_url: String,
    pub model_name: String,
    pub seed: Option<u64>,
    /// Environment variable holding the bearer token, if any.
    pub api_key_env: String,
    pub max_in_flight: usize,
    pub retry: RetryPolicy,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        GenerationConfig {
            n_candidates: 32,
            temperature: 0.8,
            max_tokens: 4096,
            endpoint_url: "http://localhost:8000/v1".to_string(),
            model_name: "sql-generator".to_string(),
            seed: Some(42),
            api_key_env: "OPENAI_API_KEY".to_string(),
            max_in_flight: 8,
            retry: RetryPolicy { request_timeout_secs: 300, ..RetryPolicy::default() },
        }
    }
}

impl GenerationConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.n_candidates == 0 {
            return Err("generation.n_candidates must be >= 1".into());
        }
        if !(self.temperature >= 0.0) {
            return Err("generation.temperature must be >= 0".into());
        }
        if self.max_in_flight == 0 {
            return Err("generation.max_in_flight must be >= 1".into());
        }
        Ok(())
    }

    /// A single candidate is always decoded greedily.
    pub fn effective_temperature(&self) -> f64 {
        if self.n_candidates == 1 {
            0.0
        } else {
            self.temperature
        }
    }

    pub fn meta(&self) -> GeneratorMeta {
        GeneratorMeta {
            model_name: self.model_name.clone(),
            n_candidates: self.n_candidates,
            temperature: self.effective_temperature(),
            max_tokens: self.max_tokens,
            seed: self.seed,
            harness_version: HARNESS_VERSION.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorMeta {
    pub model_name: String,
    pub n_candidates: usize,
    pub temperature: f64,
    pub max_tokens: u32,
    pub seed: Option<u64>,
    pub harness_version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateQuery {
    pub index: usize,
    pub sql: String,
    pub raw_completion: String,
}

impl CandidateQuery {
    pub fn from_completion(index: usize, raw_completion: String) -> Self {
        CandidateQuery { index, sql: extract_sql(&raw_completion), raw_completion }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidatePool {
    pub question_id: String,
    pub candidates: Vec<CandidateQuery>,
    pub generator_meta: GeneratorMeta,
}

impl CandidatePool {
    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    /// The first `n` candidates (prefix semantics for N-sweeps).
    pub fn prefix(&self, n: usize) -> &[CandidateQuery] {
        &self.candidates[..n.min(self.candidates.len())]
    }
}

#[derive(Debug, thiserror::Error)]
pub enum GenerationError {
    #[error(transparent)]
    Http(#[from] HttpError),
    #[error("completion {index}: {reason}")]
    BadCompletion { index: usize, reason: String },
}

/// Anything that can produce one sampled completion for a prompt.
/// `index` is the candidate's position in the pool.
pub trait CompletionBackend: Sync {
    fn complete(&self, prompt: &str, index: usize, cfg: &GenerationConfig) -> Result<String, GenerationError>;
}

/// OpenAI-compatible `POST {base}/chat/completions` client.
pub struct ChatCompletionsClient {
    client: reqwest::blocking::Client,
    api_key: Option<String>,
}

impl ChatCompletionsClient {
    pub fn new(cfg: &GenerationConfig) -> Result<Self, GenerationError> {
        let client = http::build_client(&cfg.retry)?;
        let api_key = std::env::var(&cfg.api_key_env).ok().filter(|k| !k.is_empty());
        Ok(ChatCompletionsClient { client, api_key })
    }
}

impl CompletionBackend for ChatCompletionsClient {
    fn complete(&self, prompt: &str, index: usize, cfg: &GenerationConfig) -> Result<String, GenerationError> {
        let url = http::join_url(&cfg.endpoint_url, "chat/completions");
        let mut body = json!({
            "model": cfg.model_name,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": cfg.effective_temperature(),
            "max_tokens": cfg.max_tokens,
            "n": 1,
        });
        if let Some(seed) = cfg.seed {
            body["seed"] = json!(seed.wrapping_add(index as u64));
        }
        let resp = http::post_json(&self.client, &url, &body, self.api_key.as_deref(), &cfg.retry)?;
        resp.pointer("/choices/0/message/content")
            .or_else(|| resp.pointer("/choices/0/text"))
            .and_then(|v| v.as_str())
            .map(str::to_owned)
            .ok_or_else(|| GenerationError::BadCompletion { index, reason: "response has no choices[0] content".into() })
    }
}

/// Draws `cfg.n_candidates` completions with at most `cfg.max_in_flight`
/// requests outstanding; results come back in index order.
pub fn sample_candidates(
    prompt: &str,
    cfg: &GenerationConfig,
    backend: &dyn CompletionBackend,
) -> Result<Vec<String>, GenerationError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.max_in_flight.max(1))
        .build()
        .expect("thread pool");
    pool.install(|| {
        (0..cfg.n_candidates)
            .into_par_iter()
            .map(|i| backend.complete(prompt, i, cfg))
            .collect()
    })
}

pub fn build_pool(question_id: &str, completions: Vec<String>, meta: GeneratorMeta) -> CandidatePool {
    CandidatePool {
        question_id: question_id.to_string(),
        candidates: completions.into_iter().enumerate().map(|(i, raw)| CandidateQuery::from_completion(i, raw)).collect(),
        generator_meta: meta,
    }
}

/// One line of a pool file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolRecord {
    pub question_id: String,
    pub index: usize,
    pub raw_completion: String,
    pub sql: String,
    pub generator_meta: GeneratorMeta,
}

fn pool_records(pool: &CandidatePool) -> Vec<PoolRecord> {
    pool.candidates
        .iter()
        .map(|c| PoolRecord {
            question_id: pool.question_id.clone(),
            index: c.index,
            raw_completion: c.raw_completion.clone(),
            sql: c.sql.clone(),
            generator_meta: pool.generator_meta.clone(),
        })
        .collect()
}

#[derive(Debug, thiserror::Error)]
pub enum PoolError {
    #[error(transparent)]
    Artifact(#[from] ArtifactError),
    #[error("{path}: record {index}: {reason}")]
    Invalid { path: String, index: usize, reason: String },
    #[error("pool for {question_id} has N={found}, expected N={expected}")]
    NMismatch { question_id: String, expected: usize, found: usize },
}

/// Appending writer for pool files.
pub struct PoolWriter {
    inner: LineWriter,
}

impl PoolWriter {
    pub fn create(path: &Path, header: &Header) -> Result<Self, PoolError> {
        Ok(PoolWriter { inner: LineWriter::create(path, header)? })
    }

    /// Reopens a pool file, discarding a trailing incomplete pool or a
    /// half-written line. Returns the writer and the question ids already done.
    pub fn resume(path: &Path) -> Result<(Self, HashSet<String>), PoolError> {
        let (parsed, _) = artifact::read_records_lenient::<PoolRecord>(path)?;
        let mut done = HashSet::new();
        let mut keep = parsed.header_end;
        let mut i = 0;
        while i < parsed.records.len() {
            let first = &parsed.records[i];
            let n = first.generator_meta.n_candidates;
            let group_ok = i + n <= parsed.records.len()
                && parsed.records[i..i + n]
                    .iter()
                    .enumerate()
                    .all(|(j, r)| r.question_id == first.question_id && r.index == j);
            if !group_ok || n == 0 {
                break;
            }
            done.insert(first.question_id.clone());
            keep = parsed.ends[i + n - 1];
            i += n;
        }
        Ok((PoolWriter { inner: LineWriter::append(path, keep)? }, done))
    }

    pub fn write(&mut self, pool: &CandidatePool) -> Result<(), PoolError> {
        Ok(self.inner.write_group(&pool_records(pool))?)
    }
}

pub fn save_pools(path: &Path, header: &Header, pools: &[CandidatePool]) -> Result<(), PoolError> {
    let mut w = PoolWriter::create(path, header)?;
    for p in pools {
        w.write(p)?;
    }
    Ok(())
}

/// Loads every pool in a pool file. Records of one pool are consecutive with
/// indices `0..N`, where N is the pool's `generator_meta.n_candidates`; with
/// `expected_n` set, every pool must have exactly that N.
pub fn load_pools(path: &Path, expected_n: Option<usize>) -> Result<Vec<CandidatePool>, PoolError> {
    let parsed = artifact::read_records::<PoolRecord>(path)?;
    let invalid = |index: usize, reason: String| PoolError::Invalid { path: path.display().to_string(), index, reason };
    let mut pools: Vec<CandidatePool> = Vec::new();
    let mut seen = HashSet::new();
    let mut record_index = 0;
    let mut records = parsed.records.into_iter().peekable();
    while let Some(first) = records.next() {
        let n = first.generator_meta.n_candidates;
        if let Some(expected) = expected_n {
            if n != expected {
                return Err(PoolError::NMismatch { question_id: first.question_id, expected, found: n });
            }
        }
        if first.index != 0 {
            return Err(invalid(record_index, format!("pool {} starts at index {}", first.question_id, first.index)));
        }
        if !seen.insert(first.question_id.clone()) {
            return Err(invalid(record_index, format!("pool {} appears twice", first.question_id)));
        }
        let mut pool = CandidatePool {
            question_id: first.question_id.clone(),
            candidates: Vec::with_capacity(n),
            generator_meta: first.generator_meta.clone(),
        };
        let mut push = |rec: PoolRecord| pool.candidates.push(CandidateQuery { index: rec.index, sql: rec.sql, raw_completion: rec.raw_completion });
        push(first);
        record_index += 1;
        for expected_index in 1..n {
            match records.next_if(|r| r.question_id == pool.question_id) {
                Some(rec) if rec.index == expected_index && rec.generator_meta == pool.generator_meta => {
                    push(rec);
                    record_index += 1;
                }
                Some(rec) => {
                    return Err(invalid(
                        record_index,
                        format!("pool {}: expected index {expected_index}, found {}", pool.question_id, rec.index),
                    ))
                }
                None => {
                    return Err(invalid(
                        record_index,
                        format!("pool {} truncated: {expected_index} of {n} candidates", pool.question_id),
                    ))
                }
            }
        }
        if records.peek().is_some_and(|r| r.question_id == pool.question_id) {
            return Err(invalid(record_index, format!("pool {} has more than N={n} candidates", pool.question_id)));
        }
        pools.push(pool);
    }
    Ok(pools)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Difficulty;

    fn question(evidence: &str) -> BenchmarkQuestion {
        BenchmarkQuestion {
            id: "q0".into(),
            text: "count users".into(),
            db_id: "toy".into(),
            gold_sql: "SELECT COUNT(*) FROM users".into(),
            difficulty: Difficulty::Simple,
            evidence: evidence.into(),
        }
    }

    fn schema() -> SchemaText {
        SchemaText { db_id: "toy".into(), ddl: "CREATE TABLE users (id INTEGER);".into() }
    }

    #[test]
    fn prompt_substitutes_schema_and_question() {
        let p = render_generation_prompt(&schema(), &question(""));
        assert!(p.contains("Database Schema: CREATE TABLE users (id INTEGER);\n"));
        assert!(p.contains("Question: count users\n"));
        assert!(p.ends_with("Take a deep breath and think step by step to find the correct SQL query."));
        assert_eq!(p, render_generation_prompt(&schema(), &question("")));
    }

    #[test]
    fn evidence_follows_question() {
        let p = render_generation_prompt(&schema(), &question("users means rows of users"));
        assert!(p.contains("Question: count users\nusers means rows of users\n"));
    }

    #[test]
    fn extracts_single_fence() {
        assert_eq!(extract_sql("reasoning…\n```sql\nSELECT 1\n```"), "SELECT 1");
    }

    #[test]
    fn extracts_last_of_two_fences() {
        let raw = "draft:\n```sql\nSELECT a FROM t\n```\nfinal:\n```SQL\nSELECT b FROM t;\n```\ndone";
        assert_eq!(extract_sql(raw), "SELECT b FROM t;");
    }

    #[test]
    fn untagged_and_inline_fences() {
        assert_eq!(extract_sql("```\nSELECT 2\n```"), "SELECT 2");
        assert_eq!(extract_sql("answer: ```SELECT 3```"), "SELECT 3");
        assert_eq!(extract_sql("```sql\nWITH x AS (SELECT 1) SELECT * FROM x\n"), "WITH x AS (SELECT 1) SELECT * FROM x");
    }

    #[test]
    fn no_fence_no_select_is_empty() {
        assert_eq!(extract_sql("I could not answer this question."), "");
        assert_eq!(extract_sql("```\nSELEC broken\n```"), "SELEC broken");
    }

    #[test]
    fn bare_statement_fallback() {
        let raw = "First think. The answer is\nSELECT name FROM t WHERE x IN (SELECT 1);\nThat's it.";
        assert_eq!(extract_sql(raw), "SELECT name FROM t WHERE x IN (SELECT 1);");
        let two = "SELECT a FROM t;\nbetter:\nWITH c AS (SELECT 1) SELECT * FROM c";
        assert_eq!(extract_sql(two), "WITH c AS (SELECT 1) SELECT * FROM c");
    }

    #[test]
    fn greedy_when_single_candidate() {
        let cfg = GenerationConfig { n_candidates: 1, temperature: 0.8, ..Default::default() };
        assert_eq!(cfg.effective_temperature(), 0.0);
        assert_eq!(cfg.meta().temperature, 0.0);
        assert!(GenerationConfig { n_candidates: 0, ..Default::default() }.validate().is_err());
    }

    proptest::proptest! {
        #[test]
        fn extraction_never_returns_a_fence(s in "(```|sql|SELECT|WITH|\n| |;|\\(|\\)|x|'){0,40}") {
            proptest::prop_assert!(!extract_sql(&s).contains("```"));
        }
    }
}
