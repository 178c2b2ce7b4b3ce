//! Append-only store of result records, one JSON object per line.
//!
//! A store is a directory. Records of kind `k` appended on UTC date `d` go
//! to `k/d.jsonl`. Each record carries a SHA-256 hash over the canonical
//! serialization of its other fields (object keys sorted, no whitespace),
//! so identical work always produces an identical line.
//!
//! ```text
//! {"kind":"run","machine":"1RZ---","input":"","payload":{...},"budgets":{...},"tool_version":"0.1.0","hash":"9f2c..."}
//! ```

use std::collections::BTreeSet;
use std::fmt;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::machine::InputWord;
use crate::simulator::RunLimits;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RecordKind {
    Run,
    Trace,
    Decision,
    Threshold,
    Enumeration,
    Utm,
    HaltHarm,
    HarmLabel,
    Scorecard,
    Audit,
    Rice,
}

impl RecordKind {
    pub const ALL: [RecordKind; 11] = [
        RecordKind::Run,
        RecordKind::Trace,
        RecordKind::Decision,
        RecordKind::Threshold,
        RecordKind::Enumeration,
        RecordKind::Utm,
        RecordKind::HaltHarm,
        RecordKind::HarmLabel,
        RecordKind::Scorecard,
        RecordKind::Audit,
        RecordKind::Rice,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RecordKind::Run => "run",
            RecordKind::Trace => "trace",
            RecordKind::Decision => "decision",
            RecordKind::Threshold => "threshold",
            RecordKind::Enumeration => "enumeration",
            RecordKind::Utm => "utm",
            RecordKind::HaltHarm => "halt-harm",
            RecordKind::HarmLabel => "harm-label",
            RecordKind::Scorecard => "scorecard",
            RecordKind::Audit => "audit",
            RecordKind::Rice => "rice",
        }
    }
}

impl fmt::Display for RecordKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RecordKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RecordKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown record kind {s:?}"))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub kind: RecordKind,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub machine: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub input: Option<InputWord>,
    pub payload: Value,
    pub budgets: Value,
    pub tool_version: String,
    pub hash: String,
}

/// Budgets as stored: the step limit as a decimal string, the cell limit,
/// and the wall-clock limit in milliseconds when one was set.
pub fn budgets_of(lim: &RunLimits) -> Value {
    let mut v = json!({
        "max_steps": lim.max_steps.to_str_radix(10),
        "max_cells": lim.max_cells,
    });
    if let Some(t) = lim.wall_clock {
        v["wall_clock_ms"] = json!(t.as_millis() as u64);
    }
    v
}

/// Compact JSON with object keys sorted at every level.
pub fn canonical_json(v: &Value) -> String {
    let mut out = String::new();
    write_canonical(v, &mut out);
    out
}

fn write_canonical(v: &Value, out: &mut String) {
    match v {
        Value::Object(map) => {
            out.push('{');
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            for (i, k) in keys.into_iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&Value::String(k.clone()).to_string());
                out.push(':');
                write_canonical(&map[k], out);
            }
            out.push('}');
        }
        Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_canonical(item, out);
            }
            out.push(']');
        }
        scalar => out.push_str(&scalar.to_string()),
    }
}

impl ResultRecord {
    pub fn new(
        kind: RecordKind,
        machine: Option<String>,
        input: Option<InputWord>,
        payload: &impl Serialize,
        budgets: Value,
    ) -> Self {
        let mut r = ResultRecord {
            kind,
            machine,
            input,
            payload: serde_json::to_value(payload).expect("payload serializes"),
            budgets,
            tool_version: TOOL_VERSION.to_string(),
            hash: String::new(),
        };
        r.hash = r.content_hash();
        r
    }

    /// SHA-256 over every field except `hash`.
    pub fn content_hash(&self) -> String {
        let mut v = serde_json::to_value(self).expect("record serializes");
        v.as_object_mut()
            .expect("record is an object")
            .remove("hash");
        hex::encode(Sha256::digest(canonical_json(&v).as_bytes()))
    }

    pub fn verify(&self) -> bool {
        self.hash == self.content_hash()
    }

    /// The record as one line, without the trailing newline.
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("record serializes")
    }

    /// A short status word from the payload: an outcome kind, verdict,
    /// label or answer.
    pub fn status(&self) -> Option<&str> {
        ["kind", "verdict", "label", "answer"]
            .iter()
            .find_map(|k| self.payload.get(*k).and_then(Value::as_str))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("store I/O failed at {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("record hash {found} does not match its content ({expected})")]
    HashMismatch { expected: String, found: String },
    #[error("{path}:{line}: {reason}")]
    Corrupt {
        path: PathBuf,
        line: usize,
        reason: String,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Ack {
    Appended {
        path: PathBuf,
    },
    /// A record with this hash is already stored; nothing was written.
    Duplicate {
        hash: String,
    },
}

#[derive(Clone, Debug, Default)]
pub struct Filter {
    pub kind: Option<RecordKind>,
    pub machine: Option<String>,
    pub status: Option<String>,
    /// Top-level payload fields that must match exactly.
    pub fields: Vec<(String, Value)>,
}

impl Filter {
    pub fn matches(&self, r: &ResultRecord) -> bool {
        self.kind.is_none_or(|k| r.kind == k)
            && self
                .machine
                .as_ref()
                .is_none_or(|m| r.machine.as_ref() == Some(m))
            && self
                .status
                .as_ref()
                .is_none_or(|s| r.status() == Some(s.as_str()))
            && self.fields.iter().all(|(k, v)| r.payload.get(k) == Some(v))
    }
}

/// A store directory. One writer at a time; readers may run concurrently.
#[derive(Debug)]
pub struct Store {
    root: PathBuf,
    hashes: BTreeSet<String>,
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    }
}

impl Store {
    /// Opens or creates the store at `root`, checking every stored record.
    pub fn open(root: impl AsRef<Path>) -> Result<Self, StoreError> {
        let root = root.as_ref().to_path_buf();
        fs::create_dir_all(&root).map_err(io(&root))?;
        let mut store = Store {
            root,
            hashes: BTreeSet::new(),
        };
        store.hashes = store.all()?.into_iter().map(|r| r.hash).collect();
        Ok(store)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn len(&self) -> usize {
        self.hashes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hashes.is_empty()
    }

    pub fn append(&mut self, r: &ResultRecord) -> Result<Ack, StoreError> {
        let expected = r.content_hash();
        if r.hash != expected {
            return Err(StoreError::HashMismatch {
                expected,
                found: r.hash.clone(),
            });
        }
        if self.hashes.contains(&r.hash) {
            return Ok(Ack::Duplicate {
                hash: r.hash.clone(),
            });
        }
        let dir = self.root.join(r.kind.as_str());
        fs::create_dir_all(&dir).map_err(io(&dir))?;
        let path = dir.join(format!("{}.jsonl", chrono::Utc::now().format("%Y-%m-%d")));
        let mut f = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(io(&path))?;
        writeln!(f, "{}", r.to_line()).map_err(io(&path))?;
        f.sync_data().map_err(io(&path))?;
        self.hashes.insert(r.hash.clone());
        Ok(Ack::Appended { path })
    }

    /// Matching records ordered by hash.
    pub fn query(&self, filter: &Filter) -> Result<Vec<ResultRecord>, StoreError> {
        let mut out: Vec<ResultRecord> = self
            .all()?
            .into_iter()
            .filter(|r| filter.matches(r))
            .collect();
        out.sort_by(|a, b| a.hash.cmp(&b.hash));
        out.dedup_by(|a, b| a.hash == b.hash);
        Ok(out)
    }

    fn all(&self) -> Result<Vec<ResultRecord>, StoreError> {
        let mut out = Vec::new();
        for kind in RecordKind::ALL {
            let dir = self.root.join(kind.as_str());
            if !dir.is_dir() {
                continue;
            }
            let mut files: Vec<PathBuf> = fs::read_dir(&dir)
                .map_err(io(&dir))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
                .collect();
            files.sort();
            for path in files {
                out.extend(read_records(&path)?);
            }
        }
        Ok(out)
    }
}

/// Reads and verifies every record in one file.
pub fn read_records(path: &Path) -> Result<Vec<ResultRecord>, StoreError> {
    let f = File::open(path).map_err(io(path))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(io(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let corrupt = |reason: String| StoreError::Corrupt {
            path: path.to_path_buf(),
            line: i + 1,
            reason,
        };
        let r: ResultRecord = serde_json::from_str(&line).map_err(|e| corrupt(e.to_string()))?;
        if !r.verify() {
            return Err(corrupt("hash does not match content".to_string()));
        }
        out.push(r);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deciders::enumerate;
    use crate::format::parse;
    use crate::simulator::run_accelerated;

    const CHAMPION_5: &str = "1RB1LC_1RC1RB_1RD0LE_1LA1LD_1RZ0LA";

    fn run_record(text: &str, lim: &RunLimits) -> ResultRecord {
        let m = parse(text).unwrap();
        let lim = lim.clone().with_snapshot_cells(0);
        let out = run_accelerated(&m, &InputWord::empty(), &lim);
        ResultRecord::new(
            RecordKind::Run,
            Some(text.to_string()),
            Some(InputWord::empty()),
            &out,
            budgets_of(&lim),
        )
    }

    #[test]
    fn canonical_json_sorts_keys() {
        let v = json!({"b": 1, "a": {"d": [1, {"z": null, "y": "x"}], "c": true}});
        assert_eq!(
            canonical_json(&v),
            r#"{"a":{"c":true,"d":[1,{"y":"x","z":null}]},"b":1}"#
        );
    }

    #[test]
    fn champion_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut store = Store::open(dir.path()).unwrap();
        assert!(store.query(&Filter::default()).unwrap().is_empty());
        let r = run_record(CHAMPION_5, &RunLimits::default());
        assert!(matches!(store.append(&r).unwrap(), Ack::Appended { .. }));
        let got = store
            .query(&Filter {
                machine: Some(CHAMPION_5.to_string()),
                ..Default::default()
            })
            .unwrap();
        assert_eq!(got, std::slice::from_ref(&r));
        assert_eq!(got[0].payload["steps"], json!("47176870"));
        assert_eq!(got[0].status(), Some("halted"));

        assert_eq!(
            store.append(&r).unwrap(),
            Ack::Duplicate {
                hash: r.hash.clone()
            }
        );
        // Reopening sees the same records and still deduplicates.
        let mut again = Store::open(dir.path()).unwrap();
        assert_eq!(again.len(), 1);
        assert!(matches!(again.append(&r).unwrap(), Ack::Duplicate { .. }));
    }

    #[test]
    fn corrupted_hash_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let mut store = Store::open(dir.path()).unwrap();
        let mut r = run_record("1RZ---", &RunLimits::steps(10));
        r.payload["marks"] = json!(2);
        assert!(matches!(
            store.append(&r),
            Err(StoreError::HashMismatch { .. })
        ));
        assert!(store.is_empty());
    }

    #[test]
    fn tampered_file_fails_to_open() {
        let dir = tempfile::tempdir().unwrap();
        let mut store = Store::open(dir.path()).unwrap();
        let r = run_record("1RZ---", &RunLimits::steps(10));
        let Ack::Appended { path } = store.append(&r).unwrap() else {
            panic!()
        };
        let text = fs::read_to_string(&path).unwrap();
        fs::write(&path, text.replace("\"marks\":1", "\"marks\":7")).unwrap();
        assert!(matches!(
            Store::open(dir.path()),
            Err(StoreError::Corrupt { line: 1, .. })
        ));
    }

    #[test]
    fn identical_work_identical_hash() {
        let a = run_record("1RB1LB_1LA1RZ", &RunLimits::steps(1000));
        let b = run_record("1RB1LB_1LA1RZ", &RunLimits::steps(1000));
        assert_eq!(a.to_line(), b.to_line());
        let c = run_record("1RB1LB_1LA1RZ", &RunLimits::steps(1001));
        assert_ne!(a.hash, c.hash);
    }

    #[test]
    fn enumeration_filter() {
        let dir = tempfile::tempdir().unwrap();
        let mut store = Store::open(dir.path()).unwrap();
        for n in 1..=2 {
            let report = enumerate(n, 1000).unwrap();
            let r = ResultRecord::new(
                RecordKind::Enumeration,
                None,
                None,
                &report,
                json!({"max_steps": "1000"}),
            );
            store.append(&r).unwrap();
        }
        store
            .append(&run_record("1RZ---", &RunLimits::steps(5)))
            .unwrap();
        let got = store
            .query(&Filter {
                kind: Some(RecordKind::Enumeration),
                fields: vec![("n".to_string(), json!(2))],
                ..Default::default()
            })
            .unwrap();
        assert_eq!(got.len(), 1);
        assert_eq!(got[0].payload["sigma"], json!(4));
        let all = store.query(&Filter::default()).unwrap();
        assert_eq!(all.len(), 3);
        assert!(all.windows(2).all(|w| w[0].hash < w[1].hash));
    }
}
