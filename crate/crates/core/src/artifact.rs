//! Record-per-line artifact files with an optional leading provenance header.

use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value as Json;

pub const HARNESS_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, thiserror::Error)]
pub enum ArtifactError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: record {index}: {reason}")]
    Malformed { path: PathBuf, index: usize, reason: String },
}

impl ArtifactError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        ArtifactError::Io { path: path.to_path_buf(), source }
    }
}

/// First line of every record-per-line artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Header {
    pub kind: String,
    pub harness_version: String,
    pub config: Json,
    #[serde(default, skip_serializing_if = "Json::is_null")]
    pub meta: Json,
}

impl Header {
    pub fn new(kind: &str, config: Json) -> Self {
        Header { kind: kind.to_string(), harness_version: HARNESS_VERSION.to_string(), config, meta: Json::Null }
    }

    pub fn with_meta(mut self, meta: Json) -> Self {
        self.meta = meta;
        self
    }

    pub fn to_line(&self) -> String {
        serde_json::json!({ "header": self }).to_string()
    }
}

/// A parsed artifact: header (if present) plus records, each with the byte
/// offset just past its line.
#[derive(Debug)]
pub struct Records<T> {
    pub header: Option<Header>,
    pub records: Vec<T>,
    pub ends: Vec<usize>,
    pub header_end: usize,
}

fn parse_header(line: &str) -> Option<Header> {
    let v: Json = serde_json::from_str(line).ok()?;
    let obj = v.as_object()?;
    if obj.len() != 1 {
        return None;
    }
    serde_json::from_value(obj.get("header")?.clone()).ok()
}

/// Strictly parses every record; a malformed line is reported by its
/// 0-based record index (header excluded).
pub fn read_records<T: DeserializeOwned>(path: &Path) -> Result<Records<T>, ArtifactError> {
    let text = fs::read_to_string(path).map_err(|e| ArtifactError::io(path, e))?;
    parse_records(path, &text, false).map(|(r, _)| r)
}

/// Like [`read_records`] but stops at the first malformed line and returns
/// its index instead of failing; used when resuming a crashed writer.
pub fn read_records_lenient<T: DeserializeOwned>(path: &Path) -> Result<(Records<T>, Option<usize>), ArtifactError> {
    let text = fs::read_to_string(path).map_err(|e| ArtifactError::io(path, e))?;
    parse_records(path, &text, true)
}

fn parse_records<T: DeserializeOwned>(
    path: &Path,
    text: &str,
    lenient: bool,
) -> Result<(Records<T>, Option<usize>), ArtifactError> {
    let mut out = Records { header: None, records: Vec::new(), ends: Vec::new(), header_end: 0 };
    let mut offset = 0;
    let mut first = true;
    for raw in text.split_inclusive('\n') {
        let end = offset + raw.len();
        offset = end;
        let complete = raw.ends_with('\n');
        let line = raw.trim_end_matches(['\n', '\r']);
        if line.trim().is_empty() {
            continue;
        }
        if first {
            first = false;
            if let Some(h) = parse_header(line).filter(|_| complete || !lenient) {
                out.header = Some(h);
                out.header_end = end;
                continue;
            }
        }
        let index = out.records.len();
        let parsed = if complete || !lenient {
            serde_json::from_str::<T>(line).map_err(|e| e.to_string())
        } else {
            Err("unterminated final line".to_string())
        };
        match parsed {
            Ok(rec) => {
                out.records.push(rec);
                out.ends.push(end);
            }
            Err(_) if lenient => return Ok((out, Some(index))),
            Err(reason) => return Err(ArtifactError::Malformed { path: path.to_path_buf(), index, reason }),
        }
    }
    Ok((out, None))
}

/// Buffered line writer; every [`LineWriter::write_group`] call is flushed so
/// a crash loses at most the group being written.
pub struct LineWriter {
    path: PathBuf,
    out: BufWriter<File>,
}

impl LineWriter {
    pub fn create(path: &Path, header: &Header) -> Result<Self, ArtifactError> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(|e| ArtifactError::io(dir, e))?;
        }
        let file = File::create(path).map_err(|e| ArtifactError::io(path, e))?;
        let mut w = LineWriter { path: path.to_path_buf(), out: BufWriter::new(file) };
        w.write_raw(&header.to_line())?;
        w.flush()?;
        Ok(w)
    }

    /// Opens an existing artifact for appending after truncating it to
    /// `keep_bytes`.
    pub fn append(path: &Path, keep_bytes: usize) -> Result<Self, ArtifactError> {
        let file = OpenOptions::new().write(true).open(path).map_err(|e| ArtifactError::io(path, e))?;
        file.set_len(keep_bytes as u64).map_err(|e| ArtifactError::io(path, e))?;
        let file = OpenOptions::new().append(true).open(path).map_err(|e| ArtifactError::io(path, e))?;
        Ok(LineWriter { path: path.to_path_buf(), out: BufWriter::new(file) })
    }

    fn write_raw(&mut self, line: &str) -> Result<(), ArtifactError> {
        self.out.write_all(line.as_bytes()).map_err(|e| ArtifactError::io(&self.path, e))?;
        self.out.write_all(b"\n").map_err(|e| ArtifactError::io(&self.path, e))
    }

    pub fn write_group<T: Serialize>(&mut self, records: &[T]) -> Result<(), ArtifactError> {
        for rec in records {
            let line = serde_json::to_string(rec).expect("records serialize");
            self.write_raw(&line)?;
        }
        self.flush()
    }

    pub fn flush(&mut self) -> Result<(), ArtifactError> {
        self.out.flush().map_err(|e| ArtifactError::io(&self.path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Debug, PartialEq, Serialize, Deserialize)]
    struct Rec {
        id: u32,
    }

    #[test]
    fn header_then_records_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.jsonl");
        let mut w = LineWriter::create(&path, &Header::new("test", serde_json::json!({"n": 1}))).unwrap();
        w.write_group(&[Rec { id: 1 }, Rec { id: 2 }]).unwrap();
        drop(w);
        let r: Records<Rec> = read_records(&path).unwrap();
        assert_eq!(r.header.unwrap().kind, "test");
        assert_eq!(r.records, vec![Rec { id: 1 }, Rec { id: 2 }]);
    }

    #[test]
    fn truncated_line_is_named_by_index() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.jsonl");
        fs::write(&path, "{\"id\":1}\n{\"id\":2}\n{\"id\":").unwrap();
        let err = read_records::<Rec>(&path).unwrap_err();
        assert!(matches!(err, ArtifactError::Malformed { index: 2, .. }), "{err}");

        let (partial, bad) = read_records_lenient::<Rec>(&path).unwrap();
        assert_eq!(bad, Some(2));
        assert_eq!(partial.records.len(), 2);
        assert_eq!(*partial.ends.last().unwrap(), "{\"id\":1}\n{\"id\":2}\n".len());
    }
}
