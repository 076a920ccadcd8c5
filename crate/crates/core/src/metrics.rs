//! Execution accuracy, Pass@n, difficulty strata and N-sweeps.
//!
//! Counts are kept as exact ratios; percentages are rounded half-up to two
//! decimals only when rendered.

use std::collections::BTreeMap;
use std::fmt;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::corpus::Difficulty;
use crate::labeling::Label;
use crate::scoring::CandidateScore;
use crate::selection::{derive_seed, run_strategy, SelectionError, SelectionOptions, SelectionResult, Strategy};
use crate::sqlexec::ExecutionDigest;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MetricsError {
    #[error("evaluation set is empty")]
    Empty,
    #[error("n={n} outside 1..={max} for question {question_id}")]
    NOutOfRange { n: usize, max: usize, question_id: String },
    #[error("question {question_id}: {source}")]
    Selection { question_id: String, source: SelectionError },
}

/// `hits / total`, rendered as a percentage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(into = "RatioRepr", from = "RatioRepr")]
pub struct Ratio {
    pub hits: usize,
    pub total: usize,
}

#[derive(Serialize, Deserialize)]
struct RatioRepr {
    hits: usize,
    total: usize,
    #[serde(default)]
    percent: String,
}

impl From<Ratio> for RatioRepr {
    fn from(r: Ratio) -> Self {
        RatioRepr { hits: r.hits, total: r.total, percent: r.to_string() }
    }
}

impl From<RatioRepr> for Ratio {
    fn from(r: RatioRepr) -> Self {
        Ratio { hits: r.hits, total: r.total }
    }
}

impl Ratio {
    pub fn new(hits: usize, total: usize) -> Self {
        Ratio { hits, total }
    }

    pub fn percent(self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            100.0 * self.hits as f64 / self.total as f64
        }
    }

    /// Percentage in hundredths, rounded half-up.
    pub fn hundredths(self) -> u128 {
        if self.total == 0 {
            return 0;
        }
        let (h, t) = (self.hits as u128, self.total as u128);
        (20_000 * h + t) / (2 * t)
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let h = self.hundredths();
        write!(f, "{}.{:02}", h / 100, h % 100)
    }
}

/// Per-question outcome of every strategy plus the Pass@n prefix bits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionEval {
    pub question_id: String,
    pub difficulty: Difficulty,
    pub correct: BTreeMap<Strategy, bool>,
    /// `pass[k]` is Pass@(k+1).
    pub pass: Vec<bool>,
}

pub fn pass_bits(labels: &[Label]) -> Vec<bool> {
    let mut seen = false;
    labels
        .iter()
        .map(|l| {
            seen |= *l == Label::Correct;
            seen
        })
        .collect()
}

pub fn execution_accuracy(evals: &[QuestionEval], strategy: Strategy) -> Result<Ratio, MetricsError> {
    if evals.is_empty() {
        return Err(MetricsError::Empty);
    }
    let hits = evals.iter().filter(|e| e.correct.get(&strategy).copied().unwrap_or(false)).count();
    Ok(Ratio::new(hits, evals.len()))
}

/// Fraction of questions whose first `n` candidates contain a correct one.
pub fn pass_at_n<L: AsRef<[Label]>>(question_labels: &[(String, L)], n: usize) -> Result<Ratio, MetricsError> {
    if question_labels.is_empty() {
        return Err(MetricsError::Empty);
    }
    let mut hits = 0;
    for (qid, labels) in question_labels {
        let labels = labels.as_ref();
        if n == 0 || n > labels.len() {
            return Err(MetricsError::NOutOfRange { n, max: labels.len(), question_id: qid.clone() });
        }
        if labels[..n].contains(&Label::Correct) {
            hits += 1;
        }
    }
    Ok(Ratio::new(hits, question_labels.len()))
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Stratified {
    pub total: Ratio,
    /// Non-empty strata only.
    pub strata: BTreeMap<Difficulty, Ratio>,
}

impl Stratified {
    pub fn get(&self, d: Difficulty) -> Option<Ratio> {
        self.strata.get(&d).copied()
    }
}

fn stratify(evals: &[QuestionEval], hit: impl Fn(&QuestionEval) -> bool) -> Stratified {
    let mut out = Stratified { total: Ratio::new(0, evals.len()), strata: BTreeMap::new() };
    for e in evals {
        let h = hit(e) as usize;
        out.total.hits += h;
        let s = out.strata.entry(e.difficulty).or_default();
        s.hits += h;
        s.total += 1;
    }
    out
}

pub fn stratify_by_difficulty(evals: &[QuestionEval], strategy: Strategy) -> Stratified {
    stratify(evals, |e| e.correct.get(&strategy).copied().unwrap_or(false))
}

/// Inputs for evaluating one question at any pool prefix.
#[derive(Debug, Clone)]
pub struct QuestionData {
    pub question_id: String,
    pub difficulty: Difficulty,
    pub labels: Vec<Label>,
    pub outcomes: Vec<ExecutionDigest>,
    pub scores: Vec<f64>,
}

impl QuestionData {
    pub fn pool_len(&self) -> usize {
        self.labels.len()
    }
}

/// Runs `strategies` on the first `n` candidates. Sampling strategies use
/// `derive_seed(base_seed, n, question_id)`.
pub fn evaluate_prefix(
    q: &QuestionData,
    n: usize,
    strategies: &[Strategy],
    base_seed: u64,
    opts: SelectionOptions,
) -> Result<Vec<(SelectionResult, bool)>, MetricsError> {
    if n == 0 || n > q.pool_len() || q.outcomes.len() < n || q.scores.len() < n {
        return Err(MetricsError::NOutOfRange { n, max: q.pool_len(), question_id: q.question_id.clone() });
    }
    let seed = derive_seed(base_seed, n, &q.question_id);
    let scores: Vec<CandidateScore> =
        q.scores[..n].iter().enumerate().map(|(i, &p_yes)| CandidateScore { candidate_index: i, p_yes }).collect();
    strategies
        .iter()
        .map(|&s| {
            let sel = run_strategy(s, &q.outcomes[..n], &scores, seed, opts)
                .map_err(|source| MetricsError::Selection { question_id: q.question_id.clone(), source })?;
            let ok = q.labels[sel.chosen_index] == Label::Correct;
            Ok((sel, ok))
        })
        .collect()
}

pub fn question_eval(
    q: &QuestionData,
    n: usize,
    strategies: &[Strategy],
    base_seed: u64,
    opts: SelectionOptions,
) -> Result<QuestionEval, MetricsError> {
    let results = evaluate_prefix(q, n, strategies, base_seed, opts)?;
    Ok(QuestionEval {
        question_id: q.question_id.clone(),
        difficulty: q.difficulty,
        correct: results.iter().map(|(sel, ok)| (sel.strategy, *ok)).collect(),
        pass: pass_bits(&q.labels[..n]),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: usize,
    pub strategy: Strategy,
    pub ex: Stratified,
    pub pass_at_n: Ratio,
}

/// For each `n`, every strategy on every question's first `n` candidates.
pub fn n_sweep(
    questions: &[QuestionData],
    n_values: &[usize],
    strategies: &[Strategy],
    base_seed: u64,
    opts: SelectionOptions,
) -> Result<Vec<SweepRow>, MetricsError> {
    if questions.is_empty() {
        return Err(MetricsError::Empty);
    }
    let mut rows = Vec::new();
    for &n in n_values {
        let evals = questions
            .iter()
            .map(|q| question_eval(q, n, strategies, base_seed, opts))
            .collect::<Result<Vec<_>, _>>()?;
        let pass = stratify(&evals, |e| e.pass[n - 1]).total;
        for &s in strategies {
            rows.push(SweepRow { n, strategy: s, ex: stratify_by_difficulty(&evals, s), pass_at_n: pass });
        }
    }
    Ok(rows)
}

pub const SWEEP_CSV_COLUMNS: [&str; 7] =
    ["n", "strategy", "ex_total", "ex_simple", "ex_moderate", "ex_challenging", "pass_at_n"];

/// Sweep table as CSV; `comment_lines` are written first, each prefixed `# `.
pub fn sweep_csv(rows: &[SweepRow], comment_lines: &[String]) -> String {
    let mut out = String::new();
    for line in comment_lines {
        let _ = writeln!(out, "# {line}");
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SWEEP_CSV_COLUMNS).expect("in-memory write");
    for r in rows {
        let cell = |d| r.ex.get(d).map(|x| x.to_string()).unwrap_or_default();
        w.write_record([
            r.n.to_string(),
            r.strategy.to_string(),
            r.ex.total.to_string(),
            cell(Difficulty::Simple),
            cell(Difficulty::Moderate),
            cell(Difficulty::Challenging),
            r.pass_at_n.to_string(),
        ])
        .expect("in-memory write");
    }
    out.push_str(&String::from_utf8(w.into_inner().expect("flush")).expect("utf8"));
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExcludedQuestion {
    pub question_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyReport {
    pub strategy: Strategy,
    pub ex: Stratified,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub dataset: String,
    pub n: usize,
    pub strategies: Vec<StrategyReport>,
    pub pass_at_n: Stratified,
    pub questions: Vec<QuestionEval>,
    pub excluded: Vec<ExcludedQuestion>,
}

impl EvaluationReport {
    pub fn build(
        dataset: &str,
        n: usize,
        strategies: &[Strategy],
        evals: Vec<QuestionEval>,
        excluded: Vec<ExcludedQuestion>,
    ) -> Result<Self, MetricsError> {
        if evals.is_empty() {
            return Err(MetricsError::Empty);
        }
        let strategies = strategies
            .iter()
            .map(|&s| StrategyReport { strategy: s, ex: stratify_by_difficulty(&evals, s) })
            .collect();
        let pass_at_n = stratify(&evals, |e| e.pass.last().copied().unwrap_or(false));
        Ok(EvaluationReport { dataset: dataset.to_string(), n, strategies, pass_at_n, questions: evals, excluded })
    }

    pub fn render_table(&self) -> String {
        let strata: Vec<Difficulty> =
            Difficulty::ALL.into_iter().filter(|d| self.pass_at_n.strata.contains_key(d)).collect();
        let mut out = String::new();
        let _ = writeln!(out, "dataset: {}  N={}  questions={}", self.dataset, self.n, self.questions.len());
        let mut header = format!("{:<16}", "strategy");
        for d in &strata {
            let _ = write!(header, " {:>12}", d.as_str());
        }
        let _ = write!(header, " {:>12}", "total");
        let _ = writeln!(out, "{header}");
        let mut line = |name: &str, s: &Stratified| {
            let mut row = format!("{name:<16}");
            for d in &strata {
                let _ = write!(row, " {:>12}", s.get(*d).map(|r| r.to_string()).unwrap_or_default());
            }
            let _ = write!(row, " {:>12}", s.total.to_string());
            let _ = writeln!(out, "{row}");
        };
        for s in &self.strategies {
            line(s.strategy.as_str(), &s.ex);
        }
        line(&format!("pass@{}", self.n), &self.pass_at_n);
        if !self.excluded.is_empty() {
            let _ = writeln!(out, "excluded (gold did not execute): {}", self.excluded.len());
            for e in &self.excluded {
                let _ = writeln!(out, "  {}: {}", e.question_id, e.reason);
            }
        }
        out
    }
}
