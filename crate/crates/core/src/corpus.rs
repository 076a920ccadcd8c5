//! Benchmark loading, question de-duplication and schema serialization.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rusqlite::{Connection, OpenFlags};
use serde::{Deserialize, Serialize};
use serde_json::Value as Json;
use tracing::warn;

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("no question file found under {root} for split {split} (tried {tried})")]
    MissingQuestionFile { root: PathBuf, split: Split, tried: String },
    #[error("no database directory found under {root} for split {split} (tried {tried})")]
    MissingDatabaseDir { root: PathBuf, split: Split, tried: String },
    #[error("{path}: record {index}: {reason}")]
    MalformedRecord { path: PathBuf, index: usize, reason: String },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("database {db_id}: {source}")]
    Database { db_id: String, source: rusqlite::Error },
    #[error("database {db_id} has no user tables")]
    NoTables { db_id: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "train" => Ok(Split::Train),
            "dev" => Ok(Split::Dev),
            "test" => Ok(Split::Test),
            other => Err(format!("unknown split `{other}` (expected train, dev or test)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Difficulty {
    Simple,
    Moderate,
    Challenging,
    Unknown,
}

impl Difficulty {
    pub const ALL: [Difficulty; 4] =
        [Difficulty::Simple, Difficulty::Moderate, Difficulty::Challenging, Difficulty::Unknown];

    pub fn as_str(self) -> &'static str {
        match self {
            Difficulty::Simple => "simple",
            Difficulty::Moderate => "moderate",
            Difficulty::Challenging => "challenging",
            Difficulty::Unknown => "unknown",
        }
    }

    fn parse_lenient(s: &str) -> Difficulty {
        match s.trim().to_ascii_lowercase().as_str() {
            "simple" | "easy" => Difficulty::Simple,
            "moderate" | "medium" => Difficulty::Moderate,
            "challenging" | "hard" | "extra" => Difficulty::Challenging,
            _ => Difficulty::Unknown,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchmarkQuestion {
    pub id: String,
    pub text: String,
    pub db_id: String,
    pub gold_sql: String,
    pub difficulty: Difficulty,
    #[serde(default)]
    pub evidence: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatabaseRef {
    pub db_id: String,
    pub path: PathBuf,
}

impl DatabaseRef {
    pub fn new(db_id: impl Into<String>, path: impl Into<PathBuf>) -> Self {
        DatabaseRef { db_id: db_id.into(), path: path.into() }
    }

    pub(crate) fn open_read_only(&self) -> Result<Connection, CorpusError> {
        Connection::open_with_flags(&self.path, OpenFlags::SQLITE_OPEN_READ_ONLY | OpenFlags::SQLITE_OPEN_NO_MUTEX)
            .map_err(|source| CorpusError::Database { db_id: self.db_id.clone(), source })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemaText {
    pub db_id: String,
    pub ddl: String,
}

/// Explicit file locations; each `None` falls back to probing the
/// distribution layouts of the public benchmarks.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct BenchmarkLayout {
    pub questions_file: Option<PathBuf>,
    pub databases_dir: Option<PathBuf>,
}

/// Questions plus the databases they resolved against.
#[derive(Debug, Clone, Default)]
pub struct Benchmark {
    pub questions: Vec<BenchmarkQuestion>,
    pub databases: BTreeMap<String, DatabaseRef>,
    /// `(question id, db_id)` for records whose database could not be found.
    pub dropped: Vec<(String, String)>,
}

impl Benchmark {
    pub fn database(&self, db_id: &str) -> Option<&DatabaseRef> {
        self.databases.get(db_id)
    }
}

fn question_file_candidates(root: &Path, split: Split) -> Vec<PathBuf> {
    let s = split.as_str();
    let mut out = vec![
        root.join(format!("{s}.json")),
        root.join(format!("{s}.jsonl")),
        root.join(s).join(format!("{s}.json")),
    ];
    if split == Split::Train {
        out.push(root.join("train_spider.json"));
    }
    out
}

fn database_dir_candidates(root: &Path, split: Split) -> Vec<PathBuf> {
    let s = split.as_str();
    let mut out = vec![root.join(format!("{s}_databases")), root.join(s).join(format!("{s}_databases"))];
    if split == Split::Test {
        out.push(root.join("test_database"));
    }
    out.push(root.join("database"));
    out
}

fn first_existing(candidates: &[PathBuf]) -> Option<PathBuf> {
    candidates.iter().find(|p| p.exists()).cloned()
}

fn describe(candidates: &[PathBuf]) -> String {
    candidates.iter().map(|p| p.display().to_string()).collect::<Vec<_>>().join(", ")
}

/// Loads one split of a benchmark distributed as a question file plus a
/// `<db_id>/<db_id>.sqlite` database directory (BIRD and Spider layouts).
///
/// Questions whose database cannot be resolved are dropped with a warning.
pub fn load_benchmark(root: &Path, split: Split, layout: &BenchmarkLayout) -> Result<Benchmark, CorpusError> {
    let questions_file = match &layout.questions_file {
        Some(p) => p.clone(),
        None => {
            let candidates = question_file_candidates(root, split);
            first_existing(&candidates).ok_or_else(|| CorpusError::MissingQuestionFile {
                root: root.to_path_buf(),
                split,
                tried: describe(&candidates),
            })?
        }
    };
    let databases_dir = match &layout.databases_dir {
        Some(p) => p.clone(),
        None => {
            let candidates = database_dir_candidates(root, split);
            first_existing(&candidates).ok_or_else(|| CorpusError::MissingDatabaseDir {
                root: root.to_path_buf(),
                split,
                tried: describe(&candidates),
            })?
        }
    };

    let records = read_records(&questions_file)?;
    if records.is_empty() {
        warn!(path = %questions_file.display(), "question file contains no records");
    }

    let mut bench = Benchmark::default();
    let mut missing: HashSet<String> = HashSet::new();
    for (index, record) in records.into_iter().enumerate() {
        let q = parse_record(&record, index, split)
            .map_err(|reason| CorpusError::MalformedRecord { path: questions_file.clone(), index, reason })?;
        if !bench.databases.contains_key(&q.db_id) && !missing.contains(&q.db_id) {
            let path = databases_dir.join(&q.db_id).join(format!("{}.sqlite", q.db_id));
            if path.is_file() {
                bench.databases.insert(q.db_id.clone(), DatabaseRef::new(q.db_id.clone(), path));
            } else {
                warn!(db_id = %q.db_id, path = %path.display(), "database not found; dropping its questions");
                missing.insert(q.db_id.clone());
            }
        }
        if missing.contains(&q.db_id) {
            bench.dropped.push((q.id, q.db_id));
        } else {
            bench.questions.push(q);
        }
    }
    Ok(bench)
}

fn read_records(path: &Path) -> Result<Vec<Json>, CorpusError> {
    let text = fs::read_to_string(path).map_err(|source| CorpusError::Io { path: path.to_path_buf(), source })?;
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    let malformed = |index, reason: String| CorpusError::MalformedRecord { path: path.to_path_buf(), index, reason };
    if path.extension().is_some_and(|e| e == "jsonl") {
        return text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .enumerate()
            .map(|(i, line)| serde_json::from_str(line).map_err(|e| malformed(i, e.to_string())))
            .collect();
    }
    match serde_json::from_str::<Json>(&text) {
        Ok(Json::Array(items)) => Ok(items),
        Ok(_) => Err(malformed(0, "question file must contain a JSON array".to_string())),
        Err(e) => Err(malformed(0, e.to_string())),
    }
}

fn parse_record(record: &Json, index: usize, split: Split) -> Result<BenchmarkQuestion, String> {
    let obj = record.as_object().ok_or("record is not an object")?;
    let text_field = |keys: &[&str]| -> Option<String> {
        keys.iter().find_map(|k| obj.get(*k).and_then(Json::as_str)).map(str::to_owned)
    };

    let text = text_field(&["question"]).filter(|s| !s.trim().is_empty()).ok_or("missing or empty `question`")?;
    let db_id = text_field(&["db_id"]).filter(|s| !s.trim().is_empty()).ok_or("missing or empty `db_id`")?;
    let gold_sql = text_field(&["SQL", "query", "gold_sql"])
        .filter(|s| !s.trim().is_empty())
        .ok_or("missing or empty gold SQL (`SQL` or `query`)")?;
    let difficulty = text_field(&["difficulty"]).map_or(Difficulty::Unknown, |d| Difficulty::parse_lenient(&d));
    let evidence = text_field(&["evidence"]).unwrap_or_default();
    let id = match obj.get("question_id").or_else(|| obj.get("id")) {
        Some(Json::String(s)) => s.clone(),
        Some(Json::Number(n)) => format!("{split}_{n}"),
        _ => format!("{split}_{index}"),
    };
    Ok(BenchmarkQuestion { id, text, db_id, gold_sql, difficulty, evidence })
}

fn dedup_key(q: &BenchmarkQuestion) -> (String, String) {
    let collapsed = q.text.split_whitespace().collect::<Vec<_>>().join(" ");
    (q.db_id.clone(), collapsed.to_lowercase())
}

/// Drops repeated questions, keeping the first occurrence of each
/// `(db_id, case-folded whitespace-collapsed text)` key.
pub fn deduplicate_questions(questions: Vec<BenchmarkQuestion>) -> (Vec<BenchmarkQuestion>, usize) {
    let before = questions.len();
    let mut seen = HashSet::new();
    let kept: Vec<_> = questions.into_iter().filter(|q| seen.insert(dedup_key(q))).collect();
    let removed = before - kept.len();
    (kept, removed)
}

/// The database's `CREATE TABLE` statements in catalog order, comments
/// stripped, one `;`-terminated block per table separated by blank lines.
pub fn serialize_schema(db: &DatabaseRef) -> Result<SchemaText, CorpusError> {
    let conn = db.open_read_only()?;
    let db_err = |source| CorpusError::Database { db_id: db.db_id.clone(), source };
    let mut stmt = conn
        .prepare(
            "SELECT sql FROM sqlite_master \
             WHERE type = 'table' AND name NOT LIKE 'sqlite_%' AND sql IS NOT NULL \
             ORDER BY rowid",
        )
        .map_err(db_err)?;
    let blocks = stmt
        .query_map([], |row| row.get::<_, String>(0))
        .map_err(db_err)?
        .collect::<Result<Vec<_>, _>>()
        .map_err(db_err)?;
    if blocks.is_empty() {
        return Err(CorpusError::NoTables { db_id: db.db_id.clone() });
    }
    let ddl = blocks
        .iter()
        .map(|sql| {
            let mut block = strip_sql_comments(sql);
            while block.ends_with(';') {
                block.pop();
            }
            format!("{};", block.trim_end())
        })
        .collect::<Vec<_>>()
        .join("\n\n");
    Ok(SchemaText { db_id: db.db_id.clone(), ddl })
}

/// Removes `--` and `/* */` comments outside quoted text, then drops the
/// lines left blank and trailing whitespace.
pub fn strip_sql_comments(sql: &str) -> String {
    let chars: Vec<char> = sql.chars().collect();
    let mut out = String::with_capacity(sql.len());
    let mut i = 0;
    let mut quote: Option<char> = None;
    while i < chars.len() {
        let c = chars[i];
        if let Some(q) = quote {
            out.push(c);
            if c == q {
                quote = None;
            }
            i += 1;
            continue;
        }
        match c {
            '\'' | '"' | '`' => {
                quote = Some(c);
                out.push(c);
                i += 1;
            }
            '[' => {
                quote = Some(']');
                out.push(c);
                i += 1;
            }
            '-' if chars.get(i + 1) == Some(&'-') => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
            }
            '/' if chars.get(i + 1) == Some(&'*') => {
                i += 2;
                while i < chars.len() && !(chars[i] == '*' && chars.get(i + 1) == Some(&'/')) {
                    i += 1;
                }
                i = (i + 2).min(chars.len());
            }
            _ => {
                out.push(c);
                i += 1;
            }
        }
    }
    out.lines()
        .map(str::trim_end)
        .filter(|l| !l.trim().is_empty())
        .collect::<Vec<_>>()
        .join("\n")
        .trim()
        .to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(id: &str, db: &str, text: &str) -> BenchmarkQuestion {
        BenchmarkQuestion {
            id: id.into(),
            text: text.into(),
            db_id: db.into(),
            gold_sql: "SELECT 1".into(),
            difficulty: Difficulty::Unknown,
            evidence: String::new(),
        }
    }

    #[test]
    fn trailing_spaces_and_case_are_duplicates() {
        let (kept, removed) = deduplicate_questions(vec![
            q("a", "db", "How many users?"),
            q("b", "db", "how  many users?   "),
            q("c", "other", "How many users?"),
        ]);
        assert_eq!(removed, 1);
        assert_eq!(kept.iter().map(|q| q.id.as_str()).collect::<Vec<_>>(), ["a", "c"]);
    }

    #[test]
    fn dedup_is_idempotent() {
        let input = vec![q("a", "db", "x"), q("b", "db", "X"), q("c", "db", "y")];
        let (once, _) = deduplicate_questions(input);
        let (twice, removed) = deduplicate_questions(once.clone());
        assert_eq!(removed, 0);
        assert_eq!(once, twice);
    }

    #[test]
    fn comment_stripping_respects_quotes() {
        let sql = "CREATE TABLE t ( -- the table\n  a INTEGER, /* block */ b TEXT DEFAULT '--not a comment'\n)";
        assert_eq!(strip_sql_comments(sql), "CREATE TABLE t (\n  a INTEGER,  b TEXT DEFAULT '--not a comment'\n)");
    }

    #[test]
    fn difficulty_mapping() {
        assert_eq!(Difficulty::parse_lenient("Simple"), Difficulty::Simple);
        assert_eq!(Difficulty::parse_lenient("challenging"), Difficulty::Challenging);
        assert_eq!(Difficulty::parse_lenient("?"), Difficulty::Unknown);
    }

    #[test]
    fn record_parsing_reports_missing_fields() {
        let rec = serde_json::json!({"db_id": "x", "SQL": "SELECT 1"});
        assert!(parse_record(&rec, 3, Split::Dev).unwrap_err().contains("question"));
        let spider = serde_json::json!({"db_id": "x", "query": "SELECT 1", "question": "q"});
        let parsed = parse_record(&spider, 3, Split::Train).unwrap();
        assert_eq!(parsed.id, "train_3");
        assert_eq!(parsed.difficulty, Difficulty::Unknown);
    }
}
