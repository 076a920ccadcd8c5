use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

use sqlrerank_core::artifact::read_records;
use sqlrerank_core::generation::{CompletionBackend, GenerationError};
use sqlrerank_core::harness::{self, BindingKind, QuestionExecutions, RunConfig, EXIT_CONFIG, EXIT_MISSING_ARTIFACT};
use sqlrerank_core::labeling::QuestionLabels;
use sqlrerank_core::scoring::PoolScores;
use sqlrerank_core::selection::{derive_seed, uniform_draw};
use sqlrerank_core::{Difficulty, ExecutionDigest, GenerationConfig, Label};

fn mini_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/mini-corpus")
}

fn mini_config(out: &Path) -> RunConfig {
    let mut cfg = RunConfig::load(&mini_root().join("run.toml")).unwrap();
    cfg.output_dir = out.to_path_buf();
    cfg.execution.parallelism = 1;
    cfg
}

#[test]
fn evaluate_without_labels_names_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let err = harness::cmd_evaluate(&mini_config(dir.path())).unwrap_err();
    assert_eq!(err.exit_code(), EXIT_MISSING_ARTIFACT);
    let msg = err.to_string();
    assert!(msg.contains(&dir.path().join("labels.jsonl").display().to_string()), "{msg}");
}

#[test]
fn replayed_pool_with_wrong_n_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = mini_config(dir.path());
    cfg.generation.n_candidates = 32;
    let err = harness::cmd_generate(&cfg).unwrap_err();
    assert_eq!(err.exit_code(), EXIT_CONFIG, "{err}");
}

#[test]
fn sweep_beyond_pool_size_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = mini_config(dir.path());
    cfg.selection.strategies.retain(|s| *s != sqlrerank_core::Strategy::OrmBon);
    harness::cmd_generate(&cfg).unwrap();
    harness::cmd_label(&cfg).unwrap();
    cfg.sweep.n_values = vec![1, 9];
    assert_eq!(harness::cmd_sweep(&cfg).unwrap_err().exit_code(), EXIT_CONFIG);
}

struct Counting(AtomicUsize);

impl CompletionBackend for Counting {
    fn complete(&self, _prompt: &str, index: usize, _cfg: &GenerationConfig) -> Result<String, GenerationError> {
        self.0.fetch_add(1, Ordering::SeqCst);
        Ok(format!("```sql\nSELECT {index}\n```"))
    }
}

#[test]
fn rerunning_generate_issues_no_requests() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = mini_config(dir.path());
    cfg.pools_file = None;
    cfg.generation.n_candidates = 3;
    let backend = Counting(AtomicUsize::new(0));
    let first = harness::generate_with(&cfg, Some(&backend)).unwrap();
    assert_eq!(first.written, 25);
    assert_eq!(backend.0.load(Ordering::SeqCst), 75);
    let before = fs::read(cfg.paths().pools).unwrap();

    let second = harness::generate_with(&cfg, Some(&backend)).unwrap();
    assert_eq!((second.written, second.skipped), (0, 25));
    assert_eq!(backend.0.load(Ordering::SeqCst), 75);
    assert_eq!(fs::read(cfg.paths().pools).unwrap(), before);
}

#[test]
fn interrupted_generate_resumes() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = mini_config(dir.path());
    cfg.pools_file = None;
    cfg.generation.n_candidates = 2;
    let backend = Counting(AtomicUsize::new(0));
    harness::generate_with(&cfg, Some(&backend)).unwrap();
    let full = fs::read_to_string(cfg.paths().pools).unwrap();

    // header + 10 pools of 2, then half a record
    let kept: String = full.lines().take(1 + 20).map(|l| format!("{l}\n")).collect();
    fs::write(cfg.paths().pools, format!("{kept}{}", &full.lines().nth(21).unwrap()[..30])).unwrap();
    let resumed = harness::generate_with(&cfg, Some(&backend)).unwrap();
    assert_eq!((resumed.written, resumed.skipped), (15, 10));
    assert_eq!(fs::read_to_string(cfg.paths().pools).unwrap(), full);
}

#[test]
fn interrupted_label_resumes_to_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = mini_config(dir.path());
    harness::cmd_generate(&cfg).unwrap();
    harness::cmd_label(&cfg).unwrap();
    let paths = cfg.paths();
    let labels = fs::read_to_string(&paths.labels).unwrap();
    let execs = fs::read_to_string(&paths.executions).unwrap();

    let cut = |text: &str, keep: usize| -> String {
        let mut s: String = text.lines().take(1 + keep).map(|l| format!("{l}\n")).collect();
        s.push_str("{\"question_id\":\"dev_");
        s
    };
    fs::write(&paths.labels, cut(&labels, 7)).unwrap();
    fs::write(&paths.executions, cut(&execs, 9)).unwrap();
    let summary = harness::cmd_label(&cfg).unwrap();
    assert_eq!(summary.newly_labeled, 25 - 7);
    assert_eq!(fs::read_to_string(&paths.labels).unwrap(), labels);
    assert_eq!(fs::read_to_string(&paths.executions).unwrap(), execs);
}

#[test]
fn selections_reproduce_from_saved_pools() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = mini_config(dir.path());
    cfg.scoring.binding = BindingKind::MockHash;
    harness::cmd_run(&cfg).unwrap();
    let first = fs::read(cfg.paths().selections).unwrap();
    fs::remove_file(cfg.paths().selections).unwrap();
    harness::cmd_select(&cfg).unwrap();
    assert_eq!(fs::read(cfg.paths().selections).unwrap(), first);
}

// Brute-force recomputation of the sweep table from the saved labels,
// execution digests and scores.

fn percent(hits: usize, total: usize) -> String {
    let hundredths = (hits as u128 * 20_000 + total as u128) / (2 * total as u128);
    format!("{}.{:02}", hundredths / 100, hundredths % 100)
}

fn same(a: &ExecutionDigest, b: &ExecutionDigest) -> bool {
    match (a, b) {
        (
            ExecutionDigest::Ok { columns: c1, fingerprint: f1, .. },
            ExecutionDigest::Ok { columns: c2, fingerprint: f2, .. },
        ) => c1 == c2 && f1 == f2,
        _ => false,
    }
}

fn pick(strategy: &str, qid: &str, n: usize, outcomes: &[ExecutionDigest], scores: &[f64]) -> usize {
    let seed = derive_seed(42, n, qid);
    match strategy {
        "baseline-first" => 0,
        "majority" => {
            let mut best: Vec<usize> = Vec::new();
            for i in 0..n {
                let members: Vec<usize> = (0..n).filter(|&j| same(&outcomes[i], &outcomes[j])).collect();
                // first member of each cluster speaks for it; earlier clusters win ties
                if !members.is_empty() && members[0] == i && members.len() > best.len() {
                    best = members;
                }
            }
            if best.is_empty() {
                0
            } else {
                best[uniform_draw(seed, best.len())]
            }
        }
        "ex-bon" => {
            let h = |d: &ExecutionDigest| match d {
                ExecutionDigest::Ok { rows: 0, .. } => 1,
                ExecutionDigest::Ok { .. } => 2,
                _ => 0,
            };
            let top = (0..n).map(|i| h(&outcomes[i])).max().unwrap();
            let ties: Vec<usize> = (0..n).filter(|&i| h(&outcomes[i]) == top).collect();
            ties[uniform_draw(seed, ties.len())]
        }
        "orm-bon" => {
            let mut best = 0;
            for i in 1..n {
                if scores[i] > scores[best] {
                    best = i;
                }
            }
            best
        }
        other => panic!("unknown strategy {other}"),
    }
}

#[test]
fn sweep_matches_brute_force() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = mini_config(dir.path());
    cfg.scoring.binding = BindingKind::MockHash;
    harness::cmd_run(&cfg).unwrap();
    let paths = cfg.paths();

    let labels = read_records::<QuestionLabels>(&paths.labels).unwrap().records;
    let execs: HashMap<String, QuestionExecutions> = read_records::<QuestionExecutions>(&paths.executions)
        .unwrap()
        .records
        .into_iter()
        .map(|e| (e.question_id.clone(), e))
        .collect();
    let scores: HashMap<String, Vec<f64>> = read_records::<PoolScores>(&paths.scores)
        .unwrap()
        .records
        .into_iter()
        .map(|s| (s.question_id, s.p_yes))
        .collect();
    let questions: Vec<serde_json::Value> =
        serde_json::from_str(&fs::read_to_string(mini_root().join("dev.json")).unwrap()).unwrap();
    let difficulty: HashMap<String, Difficulty> = questions
        .iter()
        .map(|q| {
            let id = format!("dev_{}", q["question_id"]);
            (id, serde_json::from_value(q["difficulty"].clone()).unwrap())
        })
        .collect();

    let scored: Vec<&QuestionLabels> = labels.iter().filter(|l| l.gold_error.is_none()).collect();
    let strata = [Difficulty::Simple, Difficulty::Moderate, Difficulty::Challenging];
    let mut expected = Vec::new();
    for n in 1..=8 {
        let pass_hits = scored.iter().filter(|l| l.labels[..n].contains(&Label::Correct)).count();
        for strategy in ["baseline-first", "majority", "ex-bon", "orm-bon"] {
            let mut hits: HashMap<Difficulty, (usize, usize)> = HashMap::new();
            let mut total_hits = 0;
            for l in &scored {
                let e = &execs[&l.question_id];
                let chosen = pick(strategy, &l.question_id, n, &e.candidates, &scores[&l.question_id]);
                let ok = l.labels[chosen] == Label::Correct;
                total_hits += ok as usize;
                let cell = hits.entry(difficulty[&l.question_id]).or_default();
                cell.0 += ok as usize;
                cell.1 += 1;
            }
            let mut row = vec![n.to_string(), strategy.to_string(), percent(total_hits, scored.len())];
            for d in strata {
                row.push(hits.get(&d).map(|&(h, t)| percent(h, t)).unwrap_or_default());
            }
            row.push(percent(pass_hits, scored.len()));
            expected.push(row.join(","));
        }
    }

    let csv = fs::read_to_string(&paths.sweep).unwrap();
    let got: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
    assert_eq!(got, expected);
}
