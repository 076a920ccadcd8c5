#!/usr/bin/env python3
"""Builds the mini corpus: databases, dev.json, pools.jsonl and expected_labels.jsonl.

Expected labels come from a brute-force pass that executes every gold and
candidate query here, independently of the Rust harness.

Usage: python3 build_fixture.py [--check]
"""
import json
import math
import os
import sqlite3
import sys
import time

from questions import DUPLICATE, QUESTIONS

HERE = os.path.dirname(os.path.abspath(__file__))
DB_IDS = ["school", "shop", "flights"]
TIMEOUT_SECS = 2.0
N = 8
META = {
    "model_name": "hand-authored",
    "n_candidates": N,
    "temperature": 0.8,
    "max_tokens": 4096,
    "seed": 42,
    "harness_version": "fixture",
}
BROKEN_GOLD = ("shop", "simple", "How many suppliers do we have?", "",
               "SELECT COUNT(*) FROM suppliers",
               ["SELECT COUNT(*) FROM customers"] * 4 + ["SELECT COUNT(*) FROM products"] * 4)


def db_path(db_id):
    return os.path.join(HERE, "dev_databases", db_id, db_id + ".sqlite")


def build_databases():
    for db_id in DB_IDS:
        path = db_path(db_id)
        os.makedirs(os.path.dirname(path), exist_ok=True)
        if os.path.exists(path):
            os.remove(path)
        with open(os.path.join(HERE, "schema", db_id + ".sql")) as f:
            script = f.read()
        conn = sqlite3.connect(path)
        conn.executescript(script)
        conn.commit()
        conn.close()


def completion(qi, ci, sql):
    if not sql:
        return "I could not work out which tables hold this information, so I will not guess a query."
    style = (qi + ci) % 5
    if style == 4 and sql.startswith("SELECT") and ";" not in sql:
        return ("Reading the schema, the relevant columns are clear.\nThe final query is\n" + sql + ";\n",
                sql + ";")
    if style == 3:
        return ("First draft:\n```sql\nSELECT * FROM sqlite_master\n```\n"
                "That only lists tables. Refining it:\n```sql\n" + sql + "\n```\n", sql)
    if style == 2:
        return ("Let's think step by step.\n1. Find the tables involved.\n2. Apply the filters.\n\n```\n"
                + sql + "\n```", sql)
    return "Take it one step at a time. The answer is:\n```sql\n" + sql + "\n```\n", sql


def canon_value(v):
    if isinstance(v, float) and math.isfinite(v) and v == int(v) and -2**63 <= v < 2**63:
        return ("num", int(v))
    if isinstance(v, (int, float)):
        return ("num", v)
    if v is None:
        return ("null", 0)
    if isinstance(v, bytes):
        return ("blob", v)
    return ("text", v)


def execute(db_id, sql):
    """('ok', ncols, frozenset) | ('error', msg) | ('timeout',)."""
    if not sql.strip():
        return ("error", "empty SQL")
    conn = sqlite3.connect("file:" + db_path(db_id) + "?mode=ro", uri=True)
    conn.execute("PRAGMA query_only = ON")
    deadline = time.monotonic() + TIMEOUT_SECS
    expired = []

    def progress():
        if time.monotonic() > deadline:
            expired.append(True)
            return 1
        return 0

    conn.set_progress_handler(progress, 1000)
    try:
        cur = conn.execute(sql)
        if cur.description is None:
            return ("error", "statement returns no columns")
        rows = frozenset(tuple(canon_value(v) for v in r) for r in cur.fetchall())
        return ("ok", len(cur.description), rows)
    except Exception as e:  # noqa: BLE001
        if expired:
            return ("timeout",)
        return ("error", str(e))
    finally:
        conn.close()


def label(gold, cand_sql):
    out = execute_cached(cand_sql)
    if out[0] != "ok":
        return "Discarded"
    return "Correct" if out[1:] == gold[1:] else "Incorrect"


_cache = {}


def execute_cached(key):
    return _cache[key]


def main():
    check = "--check" in sys.argv
    if not check:
        build_databases()
    entries = list(QUESTIONS) + [BROKEN_GOLD]
    questions = []
    pools = []
    expected = []
    for qi, (db_id, difficulty, text, evidence, gold_sql, cands) in enumerate(entries):
        assert len(cands) == N, text
        qid = "dev_%d" % qi
        questions.append({"question_id": qi, "db_id": db_id, "question": text, "evidence": evidence,
                          "SQL": gold_sql, "difficulty": difficulty})
        gold = execute(db_id, gold_sql)
        record = {"question_id": qid, "db_id": db_id}
        if gold[0] != "ok":
            record["gold_error"] = gold[1] if gold[0] == "error" else "timeout"
            record["labels"] = []
        labels = []
        for ci, c in enumerate(cands):
            made = completion(qi, ci, c)
            raw, sql = (made, "") if isinstance(made, str) else made
            pools.append({"question_id": qid, "index": ci, "raw_completion": raw, "sql": sql,
                          "generator_meta": META})
            if gold[0] == "ok":
                _cache[sql] = execute(db_id, sql)
                labels.append(label(gold, sql))
        if gold[0] == "ok":
            record["labels"] = labels
        expected.append(record)
    dup = DUPLICATE
    questions.append({"question_id": len(entries), "db_id": dup[0], "question": dup[2], "evidence": dup[3],
                      "SQL": dup[4], "difficulty": dup[1]})

    def dump(obj):
        return json.dumps(obj, ensure_ascii=False, separators=(",", ":"))

    files = {
        "dev.json": json.dumps(questions, indent=2, ensure_ascii=False) + "\n",
        "pools.jsonl": "".join(dump(p) + "\n" for p in pools),
        "expected_labels.jsonl": "".join(dump(e) + "\n" for e in expected),
    }
    for name, content in files.items():
        path = os.path.join(HERE, name)
        if check:
            with open(path) as f:
                if f.read() != content:
                    sys.exit(name + " is stale")
        else:
            with open(path, "w") as f:
                f.write(content)
    counts = {}
    for e in expected:
        for lab in e["labels"]:
            counts[lab] = counts.get(lab, 0) + 1
    print(len(questions), "questions,", len(pools), "candidates,", counts)


if __name__ == "__main__":
    main()
