use std::fs;
use std::path::Path;

use rusqlite::Connection;
use sqlrerank_core::corpus::{deduplicate_questions, load_benchmark, serialize_schema, BenchmarkLayout};
use sqlrerank_core::{Difficulty, Split};

fn make_db(root: &Path, db_id: &str, ddl: &str) {
    let dir = root.join("dev_databases").join(db_id);
    fs::create_dir_all(&dir).unwrap();
    Connection::open(dir.join(format!("{db_id}.sqlite"))).unwrap().execute_batch(ddl).unwrap();
}

fn read_varint(buf: &[u8], mut pos: usize) -> (u64, usize) {
    let mut v = 0u64;
    for i in 0..9 {
        let b = buf[pos];
        pos += 1;
        if i == 8 {
            return ((v << 8) | b as u64, pos);
        }
        v = (v << 7) | (b & 0x7f) as u64;
        if b & 0x80 == 0 {
            break;
        }
    }
    (v, pos)
}

/// `(type, name)` of every catalog row, read straight from page 1 of the
/// database file. Only handles a catalog that fits on one leaf page.
fn catalog_from_file(path: &Path) -> Vec<(String, String)> {
    let file = fs::read(path).unwrap();
    let page_size = match u16::from_be_bytes([file[16], file[17]]) {
        1 => 65_536,
        n => n as usize,
    };
    let page = &file[..page_size];
    assert_eq!(page[100], 0x0d, "catalog root is not a leaf table page");
    let cells = u16::from_be_bytes([page[103], page[104]]) as usize;
    let mut out = Vec::new();
    for c in 0..cells {
        let ptr = u16::from_be_bytes([page[108 + 2 * c], page[109 + 2 * c]]) as usize;
        let (_payload_len, p) = read_varint(page, ptr);
        let (_rowid, p) = read_varint(page, p);
        let (header_len, mut h) = read_varint(page, p);
        let header_end = p + header_len as usize;
        let mut serial = Vec::new();
        while h < header_end {
            let (t, next) = read_varint(page, h);
            serial.push(t);
            h = next;
        }
        let mut body = header_end;
        let mut texts = Vec::new();
        for &t in serial.iter().take(2) {
            assert!(t >= 13 && t % 2 == 1, "type and name are text");
            let len = ((t - 13) / 2) as usize;
            texts.push(String::from_utf8(page[body..body + len].to_vec()).unwrap());
            body += len;
        }
        out.push((texts[0].clone(), texts[1].clone()));
    }
    out
}

#[test]
fn three_tables_in_catalog_order() {
    let dir = tempfile::tempdir().unwrap();
    make_db(
        dir.path(),
        "zoo",
        "CREATE TABLE zebra (id INTEGER PRIMARY KEY, -- stripes
             name TEXT);
         CREATE INDEX zebra_name ON zebra(name);
         CREATE TABLE aardvark (id INTEGER, /* ants eaten */ ants INTEGER);
         CREATE VIEW v AS SELECT * FROM zebra;
         CREATE TABLE moose (id INTEGER, zebra_id INTEGER REFERENCES zebra(id));",
    );
    let db = sqlrerank_core::DatabaseRef::new("zoo", dir.path().join("dev_databases/zoo/zoo.sqlite"));

    let tables: Vec<String> = catalog_from_file(&db.path)
        .into_iter()
        .filter(|(kind, name)| kind == "table" && !name.starts_with("sqlite_"))
        .map(|(_, name)| name)
        .collect();
    assert_eq!(tables, ["zebra", "aardvark", "moose"]);

    let schema = serialize_schema(&db).unwrap();
    let blocks: Vec<&str> = schema.ddl.split("\n\n").collect();
    assert_eq!(blocks.len(), 3);
    for (block, table) in blocks.iter().zip(&tables) {
        assert!(block.starts_with(&format!("CREATE TABLE {table} (")), "{block}");
        assert!(block.ends_with(';'));
    }
    assert!(!schema.ddl.contains("stripes") && !schema.ddl.contains("ants eaten"));
    assert!(!schema.ddl.contains("INDEX") && !schema.ddl.contains("VIEW"));
    assert_eq!(serialize_schema(&db).unwrap(), schema);
}

#[test]
fn single_table() {
    let dir = tempfile::tempdir().unwrap();
    make_db(dir.path(), "one", "CREATE TABLE t (a INTEGER)");
    let db = sqlrerank_core::DatabaseRef::new("one", dir.path().join("dev_databases/one/one.sqlite"));
    let ddl = serialize_schema(&db).unwrap().ddl;
    assert_eq!(ddl.matches("CREATE TABLE").count(), 1);
    assert!(ddl.contains(" t ") && ddl.contains("a INTEGER"));
}

#[test]
fn bird_and_spider_records_load() {
    let dir = tempfile::tempdir().unwrap();
    make_db(dir.path(), "shop", "CREATE TABLE item (id INTEGER)");
    fs::write(
        dir.path().join("dev.json"),
        r#"[
          {"question_id": 0, "db_id": "shop", "question": "How many items?", "evidence": "item = product",
           "SQL": "SELECT COUNT(*) FROM item", "difficulty": "moderate"},
          {"db_id": "shop", "question": "List item ids", "query": "SELECT id FROM item"},
          {"db_id": "gone", "question": "Anything?", "query": "SELECT 1"}
        ]"#,
    )
    .unwrap();
    let bench = load_benchmark(dir.path(), Split::Dev, &BenchmarkLayout::default()).unwrap();
    assert_eq!(bench.questions.len(), 2);
    assert_eq!(bench.questions[0].id, "dev_0");
    assert_eq!(bench.questions[0].difficulty, Difficulty::Moderate);
    assert_eq!(bench.questions[0].evidence, "item = product");
    assert_eq!(bench.questions[1].gold_sql, "SELECT id FROM item");
    assert_eq!(bench.questions[1].difficulty, Difficulty::Unknown);
    assert_eq!(bench.dropped, [("dev_2".to_string(), "gone".to_string())]);
}

#[test]
fn empty_question_file_gives_no_questions() {
    let dir = tempfile::tempdir().unwrap();
    fs::create_dir_all(dir.path().join("dev_databases")).unwrap();
    fs::write(dir.path().join("dev.json"), "").unwrap();
    let bench = load_benchmark(dir.path(), Split::Dev, &BenchmarkLayout::default()).unwrap();
    assert!(bench.questions.is_empty());
}

#[test]
fn missing_layout_names_tried_paths() {
    let dir = tempfile::tempdir().unwrap();
    let err = load_benchmark(dir.path(), Split::Dev, &BenchmarkLayout::default()).unwrap_err();
    assert!(err.to_string().contains("dev.json"), "{err}");
}

#[test]
fn mini_corpus_dedup() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/mini-corpus");
    let bench = load_benchmark(&root, Split::Dev, &BenchmarkLayout::default()).unwrap();
    let (kept, removed) = deduplicate_questions(bench.questions.clone());
    assert_eq!((bench.questions.len(), kept.len(), removed), (26, 25, 1));
    let again = load_benchmark(&root, Split::Dev, &BenchmarkLayout::default()).unwrap();
    assert_eq!(again.questions, bench.questions);
}
