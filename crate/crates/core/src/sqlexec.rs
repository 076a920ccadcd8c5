//! Read-only, time-bounded SQL execution and canonical result sets.
//!
//! Execution equivalence between two queries is decided on [`ResultSet`]s:
//! rows are a *set* of typed tuples (duplicates collapse, row order is
//! discarded), column order inside a row is significant and column names are
//! ignored. Integral reals unify with integers (`1 == 1.0`); there is no
//! floating-point tolerance.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::atomic::{AtomicBool, Ordering as AtomicOrdering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use rusqlite::types::ValueRef;
use rusqlite::{Batch, Connection, OpenFlags};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::DatabaseRef;

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);

/// SQLite VM instructions between two deadline checks.
const PROGRESS_OPS: i32 = 1_000;

/// One typed cell.
#[derive(Debug, Clone)]
pub enum Value {
    Null,
    Integer(i64),
    Real(f64),
    Text(String),
    Blob(Vec<u8>),
}

impl Value {
    /// Canonical form: integral reals inside the `i64` range become integers.
    pub fn canonical(self) -> Value {
        match self {
            Value::Real(r) if r.fract() == 0.0 && (-9.223_372_036_854_776e18..9.223_372_036_854_776e18).contains(&r) => {
                Value::Integer(r as i64)
            }
            other => other,
        }
    }

    fn rank(&self) -> u8 {
        match self {
            Value::Null => 0,
            Value::Integer(_) | Value::Real(_) => 1,
            Value::Text(_) => 2,
            Value::Blob(_) => 3,
        }
    }

    fn from_ref(v: ValueRef<'_>) -> Value {
        match v {
            ValueRef::Null => Value::Null,
            ValueRef::Integer(i) => Value::Integer(i),
            ValueRef::Real(r) => Value::Real(r),
            ValueRef::Text(t) => Value::Text(String::from_utf8_lossy(t).into_owned()),
            ValueRef::Blob(b) => Value::Blob(b.to_vec()),
        }
    }
}

// Total order: NULL < numbers < text < blob, numbers by value. Integer and
// Real compare numerically; after canonicalization a Real is never integral,
// so Integer(i) and Real(r) are never Equal.
impl Ord for Value {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Value::Null, Value::Null) => Ordering::Equal,
            (Value::Integer(a), Value::Integer(b)) => a.cmp(b),
            (Value::Real(a), Value::Real(b)) => a.total_cmp(b),
            (Value::Integer(a), Value::Real(b)) => cmp_int_real(*a, *b),
            (Value::Real(a), Value::Integer(b)) => cmp_int_real(*b, *a).reverse(),
            (Value::Text(a), Value::Text(b)) => a.cmp(b),
            (Value::Blob(a), Value::Blob(b)) => a.cmp(b),
            (a, b) => a.rank().cmp(&b.rank()),
        }
    }
}

fn cmp_int_real(i: i64, r: f64) -> Ordering {
    match (i as f64).partial_cmp(&r) {
        Some(Ordering::Equal) | None => {
            // Only reachable for non-canonical values; keep the order total.
            Ordering::Less
        }
        Some(o) => o,
    }
}

impl PartialOrd for Value {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Value {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Value {}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Null => f.write_str("NULL"),
            Value::Integer(i) => write!(f, "{i}"),
            Value::Real(r) => write!(f, "{r}"),
            Value::Text(t) => f.write_str(t),
            Value::Blob(b) => {
                f.write_str("x'")?;
                for byte in b {
                    write!(f, "{byte:02x}")?;
                }
                f.write_str("'")
            }
        }
    }
}

pub type Row = Vec<Value>;

/// Canonical result of a row-returning query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResultSet {
    columns: Vec<String>,
    rows: Vec<Row>,
}

impl ResultSet {
    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    /// Rows in canonical (sorted, duplicate-free) order.
    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    /// Renders at most `max_rows` rows as a pipe-separated table, header first.
    pub fn preview(&self, max_rows: usize) -> String {
        let mut out = self.columns.join(" | ");
        for row in self.rows.iter().take(max_rows) {
            out.push('\n');
            let cells: Vec<String> = row.iter().map(ToString::to_string).collect();
            out.push_str(&cells.join(" | "));
        }
        if self.rows.len() > max_rows {
            out.push_str(&format!("\n... ({} more rows)", self.rows.len() - max_rows));
        }
        out
    }
}

impl ResultSet {
    /// SHA-256 over the column count and the canonical rows; equal result
    /// sets have equal fingerprints.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.columns.len() as u64).to_le_bytes());
        h.update((self.rows.len() as u64).to_le_bytes());
        for row in &self.rows {
            for v in row {
                match v {
                    Value::Null => h.update([0]),
                    Value::Integer(i) => {
                        h.update([1]);
                        h.update(i.to_le_bytes());
                    }
                    Value::Real(r) => {
                        h.update([2]);
                        h.update(r.to_bits().to_le_bytes());
                    }
                    Value::Text(t) => {
                        h.update([3]);
                        h.update((t.len() as u64).to_le_bytes());
                        h.update(t.as_bytes());
                    }
                    Value::Blob(b) => {
                        h.update([4]);
                        h.update((b.len() as u64).to_le_bytes());
                        h.update(b);
                    }
                }
            }
        }
        hex(&h.finalize())
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("row {row} has {found} cells, expected {expected}")]
pub struct RaggedRowError {
    pub row: usize,
    pub expected: usize,
    pub found: usize,
}

/// Converts raw rows into a [`ResultSet`]: cells canonicalized, duplicates
/// collapsed, row order discarded.
pub fn canonicalize_result(columns: Vec<String>, rows: Vec<Row>) -> Result<ResultSet, RaggedRowError> {
    let width = columns.len();
    let mut set = BTreeSet::new();
    for (idx, row) in rows.into_iter().enumerate() {
        if row.len() != width {
            return Err(RaggedRowError { row: idx, expected: width, found: row.len() });
        }
        set.insert(row.into_iter().map(Value::canonical).collect::<Row>());
    }
    Ok(ResultSet { columns, rows: set.into_iter().collect() })
}

/// Execution equivalence. Column names are ignored; column count and
/// within-row order matter.
pub fn result_sets_equal(a: &ResultSet, b: &ResultSet) -> bool {
    a.columns.len() == b.columns.len() && a.rows == b.rows
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExecutionOutcome {
    Ok(ResultSet),
    Error(String),
    Timeout,
}

/// Saved form of an [`ExecutionOutcome`]: the result set is reduced to its
/// shape and fingerprint.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ExecutionDigest {
    Ok { columns: usize, rows: usize, fingerprint: String },
    Error { message: String },
    Timeout,
}

/// What selection needs to know about a candidate's execution.
pub trait Executed {
    fn executed(&self) -> bool;
    /// Executed and returned no rows.
    fn empty_result(&self) -> bool;
    /// Both executed with equal result sets.
    fn same_result(&self, other: &Self) -> bool;
}

impl Executed for ExecutionOutcome {
    fn executed(&self) -> bool {
        self.is_ok()
    }

    fn empty_result(&self) -> bool {
        self.result().is_some_and(ResultSet::is_empty)
    }

    fn same_result(&self, other: &Self) -> bool {
        match (self.result(), other.result()) {
            (Some(a), Some(b)) => result_sets_equal(a, b),
            _ => false,
        }
    }
}

impl Executed for ExecutionDigest {
    fn executed(&self) -> bool {
        matches!(self, ExecutionDigest::Ok { .. })
    }

    fn empty_result(&self) -> bool {
        matches!(self, ExecutionDigest::Ok { rows: 0, .. })
    }

    fn same_result(&self, other: &Self) -> bool {
        match (self, other) {
            (
                ExecutionDigest::Ok { columns: c1, fingerprint: f1, .. },
                ExecutionDigest::Ok { columns: c2, fingerprint: f2, .. },
            ) => c1 == c2 && f1 == f2,
            _ => false,
        }
    }
}

impl<T: Executed + ?Sized> Executed for &T {
    fn executed(&self) -> bool {
        (**self).executed()
    }

    fn empty_result(&self) -> bool {
        (**self).empty_result()
    }

    fn same_result(&self, other: &Self) -> bool {
        (**self).same_result(*other)
    }
}

impl<T: Executed + ?Sized> Executed for Arc<T> {
    fn executed(&self) -> bool {
        (**self).executed()
    }

    fn empty_result(&self) -> bool {
        (**self).empty_result()
    }

    fn same_result(&self, other: &Self) -> bool {
        (**self).same_result(other)
    }
}

impl ExecutionOutcome {
    pub fn result(&self) -> Option<&ResultSet> {
        match self {
            ExecutionOutcome::Ok(rs) => Some(rs),
            _ => None,
        }
    }

    pub fn is_ok(&self) -> bool {
        matches!(self, ExecutionOutcome::Ok(_))
    }

    pub fn digest(&self) -> ExecutionDigest {
        match self {
            ExecutionOutcome::Ok(rs) => {
                ExecutionDigest::Ok { columns: rs.columns.len(), rows: rs.rows.len(), fingerprint: rs.fingerprint() }
            }
            ExecutionOutcome::Error(message) => ExecutionDigest::Error { message: message.clone() },
            ExecutionOutcome::Timeout => ExecutionDigest::Timeout,
        }
    }

    fn error(msg: impl Into<String>) -> Self {
        let msg = msg.into();
        if msg.is_empty() {
            ExecutionOutcome::Error("unknown error".to_string())
        } else {
            ExecutionOutcome::Error(msg)
        }
    }
}

/// Runs one statement against a fresh read-only connection.
///
/// Never fails past this boundary: open failures, syntax errors, write
/// statements and zero-column statements all come back as
/// [`ExecutionOutcome::Error`].
pub fn execute_query(db: &DatabaseRef, sql: &str, timeout: Duration) -> ExecutionOutcome {
    if sql.trim().is_empty() {
        return ExecutionOutcome::error("empty SQL");
    }
    let conn = match open_read_only(db) {
        Ok(c) => c,
        Err(e) => return ExecutionOutcome::error(format!("cannot open database {}: {e}", db.db_id)),
    };

    let deadline = Instant::now() + timeout;
    let expired = Arc::new(AtomicBool::new(false));
    let flag = Arc::clone(&expired);
    conn.progress_handler(
        PROGRESS_OPS,
        Some(move || {
            if Instant::now() >= deadline {
                flag.store(true, AtomicOrdering::Relaxed);
                true
            } else {
                false
            }
        }),
    );

    let failed = |e: rusqlite::Error| {
        if expired.load(AtomicOrdering::Relaxed) {
            ExecutionOutcome::Timeout
        } else {
            ExecutionOutcome::error(e.to_string())
        }
    };

    let mut batch = Batch::new(&conn, sql);
    let mut stmt = match batch.next() {
        Ok(Some(s)) => s,
        Ok(None) => return ExecutionOutcome::error("empty SQL"),
        Err(e) => return failed(e),
    };
    if !matches!(batch.next(), Ok(None)) {
        return ExecutionOutcome::error("multiple statements are rejected");
    }
    if !stmt.readonly() {
        return ExecutionOutcome::error("write statements are rejected");
    }
    let width = stmt.column_count();
    if width == 0 {
        return ExecutionOutcome::error("statement returns no columns");
    }
    let columns: Vec<String> = stmt.column_names().into_iter().map(str::to_owned).collect();

    let mut rows = match stmt.query([]) {
        Ok(r) => r,
        Err(e) => return failed(e),
    };
    let mut set = BTreeSet::new();
    loop {
        match rows.next() {
            Ok(Some(row)) => {
                let mut cells = Vec::with_capacity(width);
                for i in 0..width {
                    match row.get_ref(i) {
                        Ok(v) => cells.push(Value::from_ref(v).canonical()),
                        Err(e) => return failed(e),
                    }
                }
                set.insert(cells);
            }
            Ok(None) => break,
            Err(e) => return failed(e),
        }
    }
    ExecutionOutcome::Ok(ResultSet { columns, rows: set.into_iter().collect() })
}

fn open_read_only(db: &DatabaseRef) -> rusqlite::Result<Connection> {
    let conn = Connection::open_with_flags(
        &db.path,
        OpenFlags::SQLITE_OPEN_READ_ONLY | OpenFlags::SQLITE_OPEN_NO_MUTEX,
    )?;
    conn.pragma_update(None, "query_only", true)?;
    Ok(conn)
}

/// Executes queries with a per-run timeout and memoizes outcomes keyed by
/// `(db_id, sha256(sql))`, so duplicate candidate texts execute once.
///
/// Every execution opens its own connection; the executor can be shared
/// across worker threads.
pub struct Executor {
    timeout: Duration,
    cache: Mutex<HashMap<(String, [u8; 32]), Arc<ExecutionOutcome>>>,
}

impl Executor {
    pub fn new(timeout: Duration) -> Self {
        Executor { timeout, cache: Mutex::new(HashMap::new()) }
    }

    pub fn timeout(&self) -> Duration {
        self.timeout
    }

    pub fn execute(&self, db: &DatabaseRef, sql: &str) -> Arc<ExecutionOutcome> {
        let key = (db.db_id.clone(), sql_digest(sql));
        if let Some(hit) = self.cache.lock().expect("cache poisoned").get(&key) {
            return Arc::clone(hit);
        }
        let outcome = Arc::new(execute_query(db, sql, self.timeout));
        self.cache
            .lock()
            .expect("cache poisoned")
            .entry(key)
            .or_insert(outcome)
            .clone()
    }

    pub fn cached_len(&self) -> usize {
        self.cache.lock().expect("cache poisoned").len()
    }
}

fn sql_digest(sql: &str) -> [u8; 32] {
    Sha256::digest(sql.as_bytes()).into()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn int_rows(rows: &[&[i64]]) -> Vec<Row> {
        rows.iter().map(|r| r.iter().map(|&v| Value::Integer(v)).collect()).collect()
    }

    fn cols(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("c{i}")).collect()
    }

    #[test]
    fn duplicate_rows_collapse() {
        let rs = canonicalize_result(cols(2), int_rows(&[&[1, 2], &[1, 2]])).unwrap();
        assert_eq!(rs.rows(), int_rows(&[&[1, 2]]).as_slice());
    }

    #[test]
    fn row_order_is_discarded() {
        let a = canonicalize_result(cols(1), int_rows(&[&[2], &[1]])).unwrap();
        let b = canonicalize_result(cols(1), int_rows(&[&[1], &[2]])).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn integer_and_text_stay_distinct() {
        let rs = canonicalize_result(cols(2), vec![vec![Value::Integer(1), Value::Text("1".into())]]).unwrap();
        assert!(matches!(rs.rows()[0][0], Value::Integer(1)));
        assert!(matches!(&rs.rows()[0][1], Value::Text(t) if t == "1"));
        let as_text = canonicalize_result(cols(2), vec![vec![Value::Text("1".into()), Value::Text("1".into())]]).unwrap();
        assert!(!result_sets_equal(&rs, &as_text));
    }

    #[test]
    fn integral_real_unifies_with_integer() {
        let a = canonicalize_result(cols(1), vec![vec![Value::Real(1.0)]]).unwrap();
        let b = canonicalize_result(cols(1), vec![vec![Value::Integer(1)]]).unwrap();
        assert!(result_sets_equal(&a, &b));
        let c = canonicalize_result(cols(1), vec![vec![Value::Real(1.5)]]).unwrap();
        assert!(!result_sets_equal(&a, &c));
    }

    #[test]
    fn ragged_rows_rejected() {
        let err = canonicalize_result(cols(2), int_rows(&[&[1, 2], &[3]])).unwrap_err();
        assert_eq!(err, RaggedRowError { row: 1, expected: 2, found: 1 });
    }

    #[test]
    fn column_names_ignored_but_order_and_count_matter() {
        let a = canonicalize_result(vec!["x".into(), "y".into()], int_rows(&[&[1, 2]])).unwrap();
        let b = canonicalize_result(vec!["p".into(), "q".into()], int_rows(&[&[1, 2]])).unwrap();
        let swapped = canonicalize_result(cols(2), int_rows(&[&[2, 1]])).unwrap();
        assert!(result_sets_equal(&a, &b));
        assert!(!result_sets_equal(&a, &swapped));

        let empty1 = canonicalize_result(cols(1), vec![]).unwrap();
        let empty2 = canonicalize_result(cols(2), vec![]).unwrap();
        assert!(!result_sets_equal(&empty1, &empty2));
    }

    #[test]
    fn preview_truncates() {
        let rows: Vec<Row> = (0..25).map(|i| vec![Value::Integer(i)]).collect();
        let rs = canonicalize_result(vec!["n".into()], rows).unwrap();
        let text = rs.preview(20);
        assert_eq!(text.lines().count(), 22);
        assert!(text.ends_with("... (5 more rows)"));
    }

    #[test]
    fn digest_follows_equivalence() {
        let a = ExecutionOutcome::Ok(canonicalize_result(cols(1), vec![vec![Value::Real(3.0)], vec![Value::Integer(3)]]).unwrap());
        let b = ExecutionOutcome::Ok(canonicalize_result(vec!["other".into()], int_rows(&[&[3]])).unwrap());
        assert_eq!(a.digest(), b.digest());
        assert!(a.digest().same_result(&b.digest()));

        let wide = ExecutionOutcome::Ok(canonicalize_result(cols(2), vec![]).unwrap());
        let narrow = ExecutionOutcome::Ok(canonicalize_result(cols(1), vec![]).unwrap());
        assert!(!wide.digest().same_result(&narrow.digest()));
        assert!(wide.digest().empty_result());

        let err = ExecutionOutcome::Error("no such table: t".into());
        assert!(!err.digest().executed());
        assert!(!err.digest().same_result(&err.digest()));
        assert!(!ExecutionOutcome::Timeout.digest().same_result(&ExecutionOutcome::Timeout.digest()));
    }

    #[test]
    fn digest_round_trips_through_json() {
        let d = ExecutionOutcome::Ok(canonicalize_result(cols(1), int_rows(&[&[1]])).unwrap()).digest();
        let line = serde_json::to_string(&d).unwrap();
        assert!(line.starts_with(r#"{"status":"ok""#));
        assert_eq!(serde_json::from_str::<ExecutionDigest>(&line).unwrap(), d);
        let t = serde_json::to_string(&ExecutionDigest::Timeout).unwrap();
        assert_eq!(t, r#"{"status":"timeout"}"#);
    }

    fn arb_value() -> impl Strategy<Value = Value> {
        prop_oneof![
            Just(Value::Null),
            (-3i64..3).prop_map(Value::Integer),
            prop_oneof![Just(0.5f64), Just(1.0), Just(-2.0), Just(2.25)].prop_map(Value::Real),
            prop_oneof![Just("a"), Just("1"), Just("")].prop_map(|s| Value::Text(s.to_string())),
            prop_oneof![Just(vec![]), Just(vec![1u8])].prop_map(Value::Blob),
        ]
    }

    fn arb_result_set() -> impl Strategy<Value = ResultSet> {
        (1usize..3).prop_flat_map(|w| {
            proptest::collection::vec(proptest::collection::vec(arb_value(), w), 0..4)
                .prop_map(move |rows| canonicalize_result(cols(w), rows).unwrap())
        })
    }

    proptest! {
        #[test]
        fn canonicalize_is_idempotent(rs in arb_result_set()) {
            let again = canonicalize_result(rs.columns().to_vec(), rs.rows().to_vec()).unwrap();
            prop_assert_eq!(again, rs);
        }

        #[test]
        fn equality_is_an_equivalence(a in arb_result_set(), b in arb_result_set(), c in arb_result_set()) {
            prop_assert!(result_sets_equal(&a, &a));
            prop_assert_eq!(result_sets_equal(&a, &b), result_sets_equal(&b, &a));
            if result_sets_equal(&a, &b) && result_sets_equal(&b, &c) {
                prop_assert!(result_sets_equal(&a, &c));
            }
        }

        #[test]
        fn digest_agrees_with_outcome(a in arb_result_set(), b in arb_result_set()) {
            let (a, b) = (ExecutionOutcome::Ok(a), ExecutionOutcome::Ok(b));
            prop_assert_eq!(a.same_result(&b), a.digest().same_result(&b.digest()));
            prop_assert_eq!(a.empty_result(), a.digest().empty_result());
        }

        #[test]
        fn value_order_is_total_and_consistent(a in arb_value(), b in arb_value()) {
            let (a, b) = (a.canonical(), b.canonical());
            prop_assert_eq!(a.cmp(&b), b.cmp(&a).reverse());
            prop_assert_eq!(a == b, a.cmp(&b) == Ordering::Equal);
        }
    }
}
