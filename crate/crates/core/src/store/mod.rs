//! The description database: a JSON Lines file with a header line, loaded
//! into memory on open and rewritten in full on every change.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::io::{BufRead, BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::extract::Method;
use crate::text::term_key;

pub const DB_FORMAT: &str = "term-scribe-db";
pub const DB_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DescriptionRecord {
    pub term: String,
    pub text: String,
    pub url: String,
    pub method: Method,
    pub trigger: String,
    pub perplexity: f64,
    pub cluster_id: usize,
    pub representative: bool,
    pub indexed_at: DateTime<Utc>,
}

impl DescriptionRecord {
    fn identity(&self) -> (String, &str, &str) {
        (term_key(&self.term), &self.url, &self.text)
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    format: String,
    version: u32,
}

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Corrupt {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

/// A record left out of a batch.
#[derive(Debug, Clone, PartialEq)]
pub struct Rejected {
    pub record: DescriptionRecord,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct IndexOutcome {
    pub inserted: usize,
    pub rejected: Vec<Rejected>,
}

/// Records keyed by normalized term. Writers need `&mut`, so a shared
/// database goes behind a lock.
#[derive(Debug, Clone)]
pub struct Database {
    path: PathBuf,
    terms: BTreeMap<String, Vec<DescriptionRecord>>,
}

impl Database {
    /// Opens `path`, or starts empty when the file does not exist yet.
    pub fn open(path: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let path = path.into();
        let mut db = Self {
            path,
            terms: BTreeMap::new(),
        };
        let file = match fs::File::open(&db.path) {
            Ok(f) => f,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(db),
            Err(source) => {
                return Err(StoreError::Io {
                    path: db.path,
                    source,
                })
            }
        };
        let corrupt = |line: usize, message: String| StoreError::Corrupt {
            path: db.path.clone(),
            line,
            message,
        };
        let mut header_seen = false;
        for (idx, line) in std::io::BufReader::new(file).lines().enumerate() {
            let n = idx + 1;
            let line = line.map_err(|e| corrupt(n, e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            if !header_seen {
                let header: Header = serde_json::from_str(&line)
                    .map_err(|e| corrupt(n, format!("bad header: {e}")))?;
                if header.format != DB_FORMAT || header.version != DB_VERSION {
                    return Err(corrupt(
                        n,
                        format!(
                            "unsupported database {} version {}",
                            header.format, header.version
                        ),
                    ));
                }
                header_seen = true;
                continue;
            }
            let record: DescriptionRecord =
                serde_json::from_str(&line).map_err(|e| corrupt(n, e.to_string()))?;
            db.terms
                .entry(term_key(&record.term))
                .or_default()
                .push(record);
        }
        if !header_seen {
            return Err(corrupt(1, "missing header line".to_string()));
        }
        Ok(db)
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Indexed terms as stored (first record's spelling), in key order.
    pub fn terms(&self) -> Vec<String> {
        self.terms
            .values()
            .filter_map(|r| r.first().map(|r| r.term.clone()))
            .collect()
    }

    pub fn len(&self) -> usize {
        self.terms.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Every record, grouped by term in key order.
    pub fn records(&self) -> impl Iterator<Item = &DescriptionRecord> {
        self.terms.values().flatten()
    }

    /// Replaces the records of every term present in `records`. Records
    /// repeating an earlier `(term, url, text)` in the batch are rejected.
    /// Nothing changes unless the file is written successfully.
    pub fn index_records(
        &mut self,
        records: Vec<DescriptionRecord>,
    ) -> Result<IndexOutcome, StoreError> {
        let mut batch: BTreeMap<String, Vec<DescriptionRecord>> = BTreeMap::new();
        let mut outcome = IndexOutcome::default();
        let mut seen = HashSet::new();
        for record in records {
            let id = record.identity();
            let id = (id.0, id.1.to_string(), id.2.to_string());
            if !seen.insert(id) {
                outcome.rejected.push(Rejected {
                    reason: "duplicate (term, url, text) in batch".to_string(),
                    record,
                });
                continue;
            }
            batch.entry(term_key(&record.term)).or_default().push(record);
        }
        outcome.inserted = batch.values().map(Vec::len).sum();
        let mut next = self.terms.clone();
        next.extend(batch);
        self.commit(next)?;
        Ok(outcome)
    }

    /// Makes `records` the complete set for `term`; an empty list removes
    /// the term.
    pub fn replace_term(
        &mut self,
        term: &str,
        records: Vec<DescriptionRecord>,
    ) -> Result<IndexOutcome, StoreError> {
        let key = term_key(term);
        let mut outcome = IndexOutcome::default();
        let mut seen = HashSet::new();
        let mut kept = Vec::new();
        for record in records {
            if term_key(&record.term) != key {
                outcome.rejected.push(Rejected {
                    reason: format!("record is for `{}`, not `{term}`", record.term),
                    record,
                });
                continue;
            }
            if !seen.insert((record.url.clone(), record.text.clone())) {
                outcome.rejected.push(Rejected {
                    reason: "duplicate (term, url, text) in batch".to_string(),
                    record,
                });
                continue;
            }
            kept.push(record);
        }
        outcome.inserted = kept.len();
        let mut next = self.terms.clone();
        if kept.is_empty() {
            next.remove(&key);
        } else {
            next.insert(key, kept);
        }
        self.commit(next)?;
        Ok(outcome)
    }

    /// Records for `term` (case-insensitive): representatives first, each
    /// group by ascending perplexity.
    pub fn lookup(&self, term: &str, representatives_only: bool) -> Vec<DescriptionRecord> {
        let Some(records) = self.terms.get(&term_key(term)) else {
            return Vec::new();
        };
        let mut out: Vec<DescriptionRecord> = records
            .iter()
            .filter(|r| r.representative || !representatives_only)
            .cloned()
            .collect();
        out.sort_by(|a, b| {
            b.representative
                .cmp(&a.representative)
                .then(a.perplexity.total_cmp(&b.perplexity))
        });
        out
    }

    fn commit(&mut self, next: BTreeMap<String, Vec<DescriptionRecord>>) -> Result<(), StoreError> {
        write_atomically(&self.path, &next)?;
        self.terms = next;
        Ok(())
    }

    /// Writes the whole database as JSON Lines to `out`.
    pub fn write_jsonl<W: Write>(&self, out: W) -> std::io::Result<()> {
        write_lines(out, &self.terms)
    }
}

fn write_lines<W: Write>(
    mut out: W,
    terms: &BTreeMap<String, Vec<DescriptionRecord>>,
) -> std::io::Result<()> {
    let header = Header {
        format: DB_FORMAT.to_string(),
        version: DB_VERSION,
    };
    serde_json::to_writer(&mut out, &header)?;
    out.write_all(b"\n")?;
    for record in terms.values().flatten() {
        serde_json::to_writer(&mut out, record)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

fn write_atomically(
    path: &Path,
    terms: &BTreeMap<String, Vec<DescriptionRecord>>,
) -> Result<(), StoreError> {
    let io_err = |source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let name = path.file_name().map_or_else(
        || "db".into(),
        |n| n.to_string_lossy().into_owned(),
    );
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    let result = (|| {
        let file = fs::File::create(&tmp)?;
        let mut w = BufWriter::new(file);
        write_lines(&mut w, terms)?;
        w.into_inner().map_err(|e| e.into_error())?.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result.map_err(io_err)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(term: &str, text: &str, pp: f64, rep: bool) -> DescriptionRecord {
        DescriptionRecord {
            term: term.to_string(),
            text: text.to_string(),
            url: format!("http://e.org/{}", text.len()),
            method: Method::Nlp,
            trigger: "p1".to_string(),
            perplexity: pp,
            cluster_id: 0,
            representative: rep,
            indexed_at: DateTime::parse_from_rfc3339("2024-01-02T03:04:05Z").unwrap().into(),
        }
    }

    #[test]
    fn index_then_reindex_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("db.jsonl");
        let mut db = Database::open(&path).unwrap();
        let five: Vec<_> = (0..5).map(|i| rec("Thesaurus", &"x".repeat(i + 1), 10.0, false)).collect();
        assert_eq!(db.index_records(five.clone()).unwrap().inserted, 5);
        assert_eq!(db.lookup("thesaurus", false).len(), 5);
        let three: Vec<_> = five[..3].to_vec();
        db.index_records(three).unwrap();
        assert_eq!(db.lookup("THESAURUS", false).len(), 3);
        let reopened = Database::open(&path).unwrap();
        assert_eq!(reopened.lookup("thesaurus", false), db.lookup("thesaurus", false));
        assert!(db.lookup("unknown", false).is_empty());
    }

    #[test]
    fn header_line_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("db.jsonl");
        let mut db = Database::open(&path).unwrap();
        db.index_records(vec![rec("a", "b", 1.0, true)]).unwrap();
        let content = fs::read_to_string(&path).unwrap();
        let first = content.lines().next().unwrap();
        assert_eq!(first, r#"{"format":"term-scribe-db","version":1}"#);
        assert!(content.lines().nth(1).unwrap().contains(r#""method":"NLP""#));
    }

    #[test]
    fn duplicates_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let mut db = Database::open(dir.path().join("db")).unwrap();
        let out = db
            .index_records(vec![rec("t", "same", 5.0, false), rec("T", "same", 6.0, false)])
            .unwrap();
        assert_eq!(out.inserted, 1);
        assert_eq!(out.rejected.len(), 1);
    }

    #[test]
    fn lookup_order() {
        let dir = tempfile::tempdir().unwrap();
        let mut db = Database::open(dir.path().join("db")).unwrap();
        db.index_records(vec![
            rec("t", "a", 150.0, false),
            rec("t", "bb", 200.0, true),
            rec("t", "ccc", 50.0, true),
            rec("t", "dddd", 20.0, false),
        ])
        .unwrap();
        let pps: Vec<f64> = db.lookup("t", false).iter().map(|r| r.perplexity).collect();
        assert_eq!(pps, [50.0, 200.0, 20.0, 150.0]);
        assert_eq!(db.lookup("t", true).len(), 2);
    }

    #[test]
    fn failed_write_keeps_state() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("db");
        let mut db = Database::open(&path).unwrap();
        db.index_records(vec![rec("t", "a", 1.0, true)]).unwrap();
        // A directory where the file should be makes the rename fail.
        let mut broken = db.clone();
        broken.path = dir.path().to_path_buf();
        assert!(broken.index_records(vec![rec("t", "zz", 1.0, true)]).is_err());
        assert_eq!(broken.lookup("t", false).len(), 1);
        assert_eq!(broken.lookup("t", false)[0].text, "a");
    }

    #[test]
    fn corrupt_files_report_lines() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("db");
        fs::write(&path, "{\"format\":\"term-scribe-db\",\"version\":2}\n").unwrap();
        assert!(matches!(Database::open(&path), Err(StoreError::Corrupt { line: 1, .. })));
        fs::write(&path, "{\"format\":\"term-scribe-db\",\"version\":1}\nnot json\n").unwrap();
        assert!(matches!(Database::open(&path), Err(StoreError::Corrupt { line: 2, .. })));
    }

    #[test]
    fn replace_term_can_clear() {
        let dir = tempfile::tempdir().unwrap();
        let mut db = Database::open(dir.path().join("db")).unwrap();
        db.index_records(vec![rec("t", "a", 1.0, true), rec("u", "b", 1.0, true)]).unwrap();
        db.replace_term("T", vec![]).unwrap();
        assert_eq!(db.terms(), ["u"]);
    }
}
