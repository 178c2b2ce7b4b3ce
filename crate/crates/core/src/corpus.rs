//! Machine corpus files.
//!
//! One entry per line, tab separated:
//!
//! ```text
//! name <TAB> text [<TAB> steps <TAB> marks] [<TAB> status]
//! ```
//!
//! `status` is `halts`, `certified-nonhalting` or `holdout`. Lines with
//! counts default to `halts`; lines with neither counts nor status default
//! to `holdout` (nothing established). `#` starts a comment line.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::format::{parse, FormatError};
use crate::machine::Machine;

pub const CHAMPIONS_TSV: &str = include_str!("../data/champions.tsv");
pub const HOLDOUTS_TSV: &str = include_str!("../data/holdouts.tsv");
pub const TEST_MACHINES_TSV: &str = include_str!("../data/test_machines.tsv");

/// Environment variable naming the default corpus file for the CLI.
pub const CORPUS_ENV: &str = "TMLAB_CORPUS";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Halts,
    CertifiedNonhalting,
    Holdout,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Halts => "halts",
            Status::CertifiedNonhalting => "certified-nonhalting",
            Status::Holdout => "holdout",
        })
    }
}

impl std::str::FromStr for Status {
    type Err = ();
    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "halts" => Ok(Status::Halts),
            "certified-nonhalting" => Ok(Status::CertifiedNonhalting),
            "holdout" => Ok(Status::Holdout),
            _ => Err(()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Expected {
    pub steps: u64,
    pub marks: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CorpusEntry {
    pub name: String,
    pub text: String,
    pub machine: Machine,
    pub expected: Option<Expected>,
    pub status: Status,
}

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("reading corpus: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: machine text: {source}")]
    BadMachine {
        line: usize,
        #[source]
        source: FormatError,
    },
    #[error("line {second}: machine text duplicates line {first}")]
    Duplicate { first: usize, second: usize },
}

pub fn load_corpus(path: impl AsRef<Path>) -> Result<Vec<CorpusEntry>, CorpusError> {
    parse_corpus(&std::fs::read_to_string(path)?)
}

pub fn parse_corpus(contents: &str) -> Result<Vec<CorpusEntry>, CorpusError> {
    let mut seen: HashMap<String, usize> = HashMap::new();
    let mut entries = Vec::new();
    for (idx, raw) in contents.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim_end_matches('\r');
        if trimmed.trim().is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let malformed = |message: String| CorpusError::Malformed { line, message };
        let fields: Vec<&str> = trimmed.split('\t').collect();
        let number = |s: &str| {
            s.parse::<u64>()
                .map_err(|_| malformed(format!("expected a decimal count, found {s:?}")))
        };
        let status = |s: &str| {
            s.parse::<Status>()
                .map_err(|_| malformed(format!("unknown status {s:?}")))
        };
        let (expected, status) = match fields.len() {
            2 => (None, Status::Holdout),
            3 => (None, status(fields[2])?),
            4 => (
                Some(Expected {
                    steps: number(fields[2])?,
                    marks: number(fields[3])?,
                }),
                Status::Halts,
            ),
            5 => (
                Some(Expected {
                    steps: number(fields[2])?,
                    marks: number(fields[3])?,
                }),
                status(fields[4])?,
            ),
            n => {
                return Err(malformed(format!(
                    "expected 2 to 5 tab-separated fields, found {n}"
                )))
            }
        };
        if expected.is_some() && status != Status::Halts {
            return Err(malformed(
                "step and mark counts are only allowed for halting entries".into(),
            ));
        }
        let name = fields[0].to_string();
        if name.is_empty() {
            return Err(malformed("empty name".into()));
        }
        let text = fields[1].to_string();
        let machine = parse(&text).map_err(|source| CorpusError::BadMachine { line, source })?;
        if let Some(&first) = seen.get(&text) {
            return Err(CorpusError::Duplicate {
                first,
                second: line,
            });
        }
        seen.insert(text.clone(), line);
        entries.push(CorpusEntry {
            name,
            text,
            machine,
            expected,
            status,
        });
    }
    Ok(entries)
}

impl CorpusEntry {
    /// The entry as one corpus line.
    pub fn to_line(&self) -> String {
        match (self.expected, self.status) {
            (Some(e), _) => format!("{}\t{}\t{}\t{}", self.name, self.text, e.steps, e.marks),
            (None, s) => format!("{}\t{}\t{}", self.name, self.text, s),
        }
    }
}

fn bundled(contents: &str) -> Vec<CorpusEntry> {
    parse_corpus(contents).expect("bundled corpus is well-formed")
}

pub fn champions() -> Vec<CorpusEntry> {
    bundled(CHAMPIONS_TSV)
}

pub fn holdouts() -> Vec<CorpusEntry> {
    bundled(HOLDOUTS_TSV)
}

pub fn test_machines() -> Vec<CorpusEntry> {
    bundled(TEST_MACHINES_TSV)
}

/// Every bundled entry, in file order.
pub fn all_bundled() -> Vec<CorpusEntry> {
    let mut all = champions();
    all.extend(holdouts());
    all.extend(test_machines());
    all
}

/// Looks up a bundled machine by entry name.
pub fn bundled_by_name(name: &str) -> Option<CorpusEntry> {
    all_bundled().into_iter().find(|e| e.name == name)
}
