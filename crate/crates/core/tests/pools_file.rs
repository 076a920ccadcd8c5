use std::fs;
use std::path::Path;

use serde_json::json;
use sqlrerank_core::artifact::{read_records, Header};
use sqlrerank_core::generation::{
    build_pool, extract_sql, load_pools, save_pools, GeneratorMeta, PoolError, PoolRecord, PoolWriter,
};

fn meta(n: usize) -> GeneratorMeta {
    GeneratorMeta {
        model_name: "test".into(),
        n_candidates: n,
        temperature: 0.8,
        max_tokens: 64,
        seed: Some(42),
        harness_version: "test".into(),
    }
}

fn completions(qid: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("Reasoning for {qid}.\n```sql\nSELECT {i}\n```")).collect()
}

#[test]
fn pool_of_eight_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("pools.jsonl");
    let pools = vec![build_pool("q1", completions("q1", 8), meta(8)), build_pool("q2", completions("q2", 8), meta(8))];
    save_pools(&path, &Header::new("pools", json!({})), &pools).unwrap();
    let records = read_records::<PoolRecord>(&path).unwrap().records;
    assert_eq!(records.len(), 16);
    assert_eq!(load_pools(&path, Some(8)).unwrap(), pools);
    assert_eq!(pools[0].candidates[5].sql, "SELECT 5");
}

#[test]
fn truncated_file_names_the_record() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("pools.jsonl");
    save_pools(&path, &Header::new("pools", json!({})), &[build_pool("q1", completions("q1", 8), meta(8))]).unwrap();
    let text = fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    let mut cut = lines[..6].join("\n");
    cut.push('\n');
    cut.push_str(&lines[6][..lines[6].len() / 2]);
    fs::write(&path, cut).unwrap();
    let err = load_pools(&path, None).unwrap_err();
    assert!(err.to_string().contains("record 5"), "{err}");

    let whole: String = lines[..6].iter().map(|l| format!("{l}\n")).collect();
    fs::write(&path, whole).unwrap();
    let err = load_pools(&path, None).unwrap_err();
    assert!(matches!(err, PoolError::Invalid { index: 5, .. }), "{err}");
}

#[test]
fn strict_n_check() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("pools.jsonl");
    save_pools(&path, &Header::new("pools", json!({})), &[build_pool("q1", completions("q1", 4), meta(4))]).unwrap();
    let err = load_pools(&path, Some(8)).unwrap_err();
    assert!(matches!(err, PoolError::NMismatch { expected: 8, found: 4, .. }), "{err}");
}

#[test]
fn resume_drops_partial_pool() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("pools.jsonl");
    let pools = [build_pool("q1", completions("q1", 3), meta(3)), build_pool("q2", completions("q2", 3), meta(3))];
    save_pools(&path, &Header::new("pools", json!({})), &pools).unwrap();
    let text = fs::read_to_string(&path).unwrap();
    let keep: String = text.lines().take(6).map(|l| format!("{l}\n")).collect();
    fs::write(&path, format!("{keep}{{\"question_id\":\"q2\",\"ind")).unwrap();

    let (mut w, done) = PoolWriter::resume(&path).unwrap();
    assert_eq!(done.into_iter().collect::<Vec<_>>(), ["q1"]);
    w.write(&pools[1]).unwrap();
    drop(w);
    assert_eq!(fs::read_to_string(&path).unwrap(), text);
}

#[test]
fn fixture_pools_store_extracted_sql() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/mini-corpus/pools.jsonl");
    let records = read_records::<PoolRecord>(&path).unwrap().records;
    assert_eq!(records.len(), 25 * 8);
    for r in &records {
        assert_eq!(extract_sql(&r.raw_completion), r.sql, "{} #{}", r.question_id, r.index);
    }
}
