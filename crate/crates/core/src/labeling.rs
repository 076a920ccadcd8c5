//! Execution-equivalence labels and the verifier training dataset.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::corpus::{BenchmarkQuestion, SchemaText};
use crate::generation::{question_with_evidence, CandidatePool, CandidateQuery};
use crate::scoring::VerificationPromptVariant;
use crate::sqlexec::{result_sets_equal, ExecutionOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    Correct,
    Incorrect,
    Discarded,
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Correct => "Correct",
            Label::Incorrect => "Incorrect",
            Label::Discarded => "Discarded",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BinaryLabel {
    Yes,
    No,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LabelingError {
    #[error("gold query for {question_id} did not execute: {reason}")]
    GoldFailed { question_id: String, reason: String },
    #[error("pool references unknown question {0}")]
    UnknownQuestion(String),
    #[error("pool {question_id}: {found} outcomes for {expected} candidates")]
    OutcomeCount { question_id: String, expected: usize, found: usize },
}

pub fn gold_failure_reason(outcome: &ExecutionOutcome) -> Option<String> {
    match outcome {
        ExecutionOutcome::Ok(_) => None,
        ExecutionOutcome::Error(msg) => Some(msg.clone()),
        ExecutionOutcome::Timeout => Some("timeout".to_string()),
    }
}

/// `Correct` iff the candidate's result set equals the gold one; `Discarded`
/// when the candidate has no SQL or did not execute.
pub fn label_candidate(
    candidate: &CandidateQuery,
    gold_outcome: &ExecutionOutcome,
    cand_outcome: &ExecutionOutcome,
) -> Result<Label, LabelingError> {
    let ExecutionOutcome::Ok(gold) = gold_outcome else {
        return Err(LabelingError::GoldFailed {
            question_id: String::new(),
            reason: gold_failure_reason(gold_outcome).unwrap_or_default(),
        });
    };
    if candidate.sql.trim().is_empty() {
        return Ok(Label::Discarded);
    }
    Ok(match cand_outcome {
        ExecutionOutcome::Ok(rs) if result_sets_equal(rs, gold) => Label::Correct,
        ExecutionOutcome::Ok(_) => Label::Incorrect,
        ExecutionOutcome::Error(_) | ExecutionOutcome::Timeout => Label::Discarded,
    })
}

/// One line of the labels file: every candidate's label, in pool order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionLabels {
    pub question_id: String,
    pub db_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold_error: Option<String>,
    pub labels: Vec<Label>,
}

impl QuestionLabels {
    pub fn gold_ok(&self) -> bool {
        self.gold_error.is_none()
    }
}

pub fn label_pool(
    question: &BenchmarkQuestion,
    pool: &CandidatePool,
    gold_outcome: &ExecutionOutcome,
    outcomes: &[Arc<ExecutionOutcome>],
) -> Result<QuestionLabels, LabelingError> {
    if outcomes.len() != pool.len() {
        return Err(LabelingError::OutcomeCount {
            question_id: pool.question_id.clone(),
            expected: pool.len(),
            found: outcomes.len(),
        });
    }
    let mut out = QuestionLabels {
        question_id: question.id.clone(),
        db_id: question.db_id.clone(),
        gold_error: gold_failure_reason(gold_outcome),
        labels: Vec::with_capacity(pool.len()),
    };
    if out.gold_error.is_some() {
        return Ok(out);
    }
    for (cand, outcome) in pool.candidates.iter().zip(outcomes) {
        out.labels.push(label_candidate(cand, gold_outcome, outcome)?);
    }
    Ok(out)
}

/// Matches each pool to its question, in pool-file order.
pub fn pair_pools<'a>(
    questions: &'a [BenchmarkQuestion],
    pools: &'a [CandidatePool],
) -> Result<Vec<(&'a BenchmarkQuestion, &'a CandidatePool)>, LabelingError> {
    let by_id: HashMap<&str, &BenchmarkQuestion> = questions.iter().map(|q| (q.id.as_str(), q)).collect();
    pools
        .iter()
        .map(|p| {
            by_id
                .get(p.question_id.as_str())
                .map(|q| (*q, p))
                .ok_or_else(|| LabelingError::UnknownQuestion(p.question_id.clone()))
        })
        .collect()
}

/// One verifier training record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledExample {
    pub question_id: String,
    pub db_id: String,
    pub schema_ddl: String,
    pub question: String,
    pub sql: String,
    pub label: BinaryLabel,
    pub prompt_variant: VerificationPromptVariant,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub result_preview: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub n_questions: usize,
    pub n_examples: usize,
    pub n_correct: usize,
    pub n_incorrect: usize,
    pub pct_correct: f64,
    pub pct_incorrect: f64,
}

impl DatasetStats {
    pub fn from_examples(examples: &[LabeledExample]) -> Self {
        let n_examples = examples.len();
        let n_correct = examples.iter().filter(|e| e.label == BinaryLabel::Yes).count();
        let n_incorrect = n_examples - n_correct;
        let pct = |k: usize| if n_examples == 0 { 0.0 } else { 100.0 * k as f64 / n_examples as f64 };
        let mut ids: Vec<&str> = examples.iter().map(|e| e.question_id.as_str()).collect();
        ids.sort_unstable();
        ids.dedup();
        DatasetStats {
            n_questions: ids.len(),
            n_examples,
            n_correct,
            n_incorrect,
            pct_correct: pct(n_correct),
            pct_incorrect: pct(n_incorrect),
        }
    }
}

/// Everything needed to turn one labeled pool into training examples.
pub struct LabeledPool<'a> {
    pub question: &'a BenchmarkQuestion,
    pub schema: &'a SchemaText,
    pub pool: &'a CandidatePool,
    pub labels: &'a QuestionLabels,
    /// Result previews; read only by data-bearing prompt variants.
    pub previews: Option<&'a [String]>,
}

/// One example per non-discarded candidate, in question order then candidate
/// index order.
pub fn build_labeled_dataset(
    items: &[LabeledPool<'_>],
    variant: VerificationPromptVariant,
) -> (Vec<LabeledExample>, DatasetStats) {
    let mut examples = Vec::new();
    for item in items {
        let question = question_with_evidence(item.question);
        for (cand, label) in item.pool.candidates.iter().zip(&item.labels.labels) {
            let label = match label {
                Label::Correct => BinaryLabel::Yes,
                Label::Incorrect => BinaryLabel::No,
                Label::Discarded => continue,
            };
            let result_preview = if variant.uses_result_preview() {
                item.previews.and_then(|p| p.get(cand.index)).cloned()
            } else {
                None
            };
            examples.push(LabeledExample {
                question_id: item.question.id.clone(),
                db_id: item.question.db_id.clone(),
                schema_ddl: item.schema.ddl.clone(),
                question: question.clone(),
                sql: cand.sql.clone(),
                label,
                prompt_variant: variant,
                result_preview,
            });
        }
    }
    let stats = DatasetStats::from_examples(&examples);
    (examples, stats)
}

/// Per question, keeps the first `min(s+, s-)` examples of each class.
/// Questions lacking either class contribute nothing. Relative order is kept.
pub fn balance_dataset(examples: &[LabeledExample]) -> Vec<LabeledExample> {
    let mut counts: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for e in examples {
        let c = counts.entry(e.question_id.as_str()).or_default();
        match e.label {
            BinaryLabel::Yes => c.0 += 1,
            BinaryLabel::No => c.1 += 1,
        }
    }
    let mut taken: HashMap<&str, (usize, usize)> = HashMap::new();
    examples
        .iter()
        .filter(|e| {
            let (yes, no) = counts[e.question_id.as_str()];
            let quota = yes.min(no);
            let t = taken.entry(e.question_id.as_str()).or_default();
            let slot = match e.label {
                BinaryLabel::Yes => &mut t.0,
                BinaryLabel::No => &mut t.1,
            };
            if *slot < quota {
                *slot += 1;
                true
            } else {
                false
            }
        })
        .cloned()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sqlexec::{canonicalize_result, Value};
    use proptest::prelude::*;

    fn ok(v: i64) -> ExecutionOutcome {
        ExecutionOutcome::Ok(canonicalize_result(vec!["a".into()], vec![vec![Value::Integer(v)]]).unwrap())
    }

    fn cand(sql: &str) -> CandidateQuery {
        CandidateQuery { index: 0, sql: sql.into(), raw_completion: String::new() }
    }

    #[test]
    fn label_definitions() {
        let gold = ok(1);
        assert_eq!(label_candidate(&cand("SELECT 1"), &gold, &ok(1)).unwrap(), Label::Correct);
        assert_eq!(label_candidate(&cand("SELECT 2"), &gold, &ok(2)).unwrap(), Label::Incorrect);
        assert_eq!(label_candidate(&cand("SELECT 3"), &gold, &ExecutionOutcome::Timeout).unwrap(), Label::Discarded);
        assert_eq!(label_candidate(&cand(""), &gold, &ok(1)).unwrap(), Label::Discarded);
        assert!(matches!(
            label_candidate(&cand("SELECT 1"), &ExecutionOutcome::Error("boom".into()), &ok(1)),
            Err(LabelingError::GoldFailed { .. })
        ));
    }

    fn example(qid: &str, label: BinaryLabel, sql: &str) -> LabeledExample {
        LabeledExample {
            question_id: qid.into(),
            db_id: "db".into(),
            schema_ddl: String::new(),
            question: String::new(),
            sql: sql.into(),
            label,
            prompt_variant: VerificationPromptVariant::SqlOnly,
            result_preview: None,
        }
    }

    #[test]
    fn balance_keeps_min_of_each_class() {
        let mut ex = Vec::new();
        for i in 0..5 {
            ex.push(example("q", BinaryLabel::Yes, &format!("y{i}")));
        }
        for i in 0..3 {
            ex.push(example("q", BinaryLabel::No, &format!("n{i}")));
        }
        for i in 0..7 {
            ex.push(example("r", BinaryLabel::No, &format!("r{i}")));
        }
        let out = balance_dataset(&ex);
        assert_eq!(out.len(), 6);
        let sqls: Vec<_> = out.iter().map(|e| e.sql.as_str()).collect();
        assert_eq!(sqls, ["y0", "y1", "y2", "n0", "n1", "n2"]);
    }

    proptest! {
        #[test]
        fn balance_invariants(spec in proptest::collection::vec((0u8..5, any::<bool>()), 0..60)) {
            let ex: Vec<_> = spec.iter().enumerate()
                .map(|(i, (q, yes))| example(&format!("q{q}"), if *yes { BinaryLabel::Yes } else { BinaryLabel::No }, &i.to_string()))
                .collect();
            let out = balance_dataset(&ex);

            let mut expected_total = 0;
            for q in 0..5u8 {
                let id = format!("q{q}");
                let yes = ex.iter().filter(|e| e.question_id == id && e.label == BinaryLabel::Yes).count();
                let no = ex.iter().filter(|e| e.question_id == id && e.label == BinaryLabel::No).count();
                let oy = out.iter().filter(|e| e.question_id == id && e.label == BinaryLabel::Yes).count();
                let on = out.iter().filter(|e| e.question_id == id && e.label == BinaryLabel::No).count();
                prop_assert_eq!(oy, on);
                prop_assert_eq!(oy, yes.min(no));
                expected_total += 2 * yes.min(no);
            }
            prop_assert_eq!(out.len(), expected_total);
            prop_assert!(out.iter().all(|e| ex.contains(e)));
            prop_assert_eq!(balance_dataset(&out), out);
        }
    }
}
