//! The control gate: consult an oracle, then run the program or refuse.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use chrono::{SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

use super::oracle::{AnswerKind, HarmOracle, OracleAnswer};
use super::ContainedProgram;
use crate::machine::InputWord;
use crate::simulator::{run_accelerated, OutcomeKind, RunLimits, RunOutcome};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Policy {
    /// Unknown answers disable the run.
    #[default]
    FailClosed,
    /// Unknown answers let the run go ahead.
    FailOpen,
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Policy::FailClosed => "fail-closed",
            Policy::FailOpen => "fail-open",
        })
    }
}

impl FromStr for Policy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fail-closed" => Ok(Policy::FailClosed),
            "fail-open" => Ok(Policy::FailOpen),
            other => Err(format!(
                "unknown policy {other:?}; expected fail-closed or fail-open"
            )),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DisableReason {
    Harmful,
    Unknown,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GateDecision {
    Executed(RunOutcome),
    Disabled(DisableReason),
}

impl GateDecision {
    pub fn executed(&self) -> bool {
        matches!(self, GateDecision::Executed(_))
    }
}

/// One line of the audit log.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub program: String,
    pub input: InputWord,
    pub oracle: String,
    pub answer: AnswerKind,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub justification: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub oracle_error: Option<String>,
    pub policy: Policy,
    pub executed: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub outcome: Option<OutcomeKind>,
    pub started_at: String,
    pub finished_at: String,
}

#[derive(Debug, thiserror::Error)]
#[error("audit log write failed: {0}")]
pub struct GateError(#[from] std::io::Error);

/// Append-only audit log, kept in memory and optionally mirrored to a
/// line-delimited JSON sink.
#[derive(Default)]
pub struct AuditLog {
    records: Vec<AuditRecord>,
    sink: Option<Box<dyn Write + Send>>,
}

impl fmt::Debug for AuditLog {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AuditLog")
            .field("records", &self.records)
            .field("sink", &self.sink.is_some())
            .finish()
    }
}

impl AuditLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_sink(sink: impl Write + Send + 'static) -> Self {
        AuditLog {
            records: Vec::new(),
            sink: Some(Box::new(sink)),
        }
    }

    pub fn records(&self) -> &[AuditRecord] {
        &self.records
    }

    pub fn append(&mut self, r: AuditRecord) -> Result<(), GateError> {
        if let Some(sink) = &mut self.sink {
            let line = serde_json::to_string(&r).expect("audit record serializes");
            writeln!(sink, "{line}")?;
            sink.flush()?;
        }
        self.records.push(r);
        Ok(())
    }

    /// Records executed even though the oracle said Harmful, or said
    /// Unknown under fail-closed. Empty for a log written by [`control_gate`].
    pub fn violations(&self) -> Vec<&AuditRecord> {
        self.records
            .iter()
            .filter(|r| {
                r.executed
                    && (r.answer == AnswerKind::Harmful
                        || r.answer == AnswerKind::Unknown && r.policy == Policy::FailClosed)
            })
            .collect()
    }
}

fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

/// Asks `oracle` about `p` on `w`. Harmful always disables; Safe runs the
/// program within `lim`; Unknown, including an oracle failure, follows
/// `policy`. Every decision is logged, with the outcome kind of any run.
pub fn control_gate(
    oracle: &dyn HarmOracle,
    p: &ContainedProgram,
    w: &InputWord,
    policy: Policy,
    lim: &RunLimits,
    log: &mut AuditLog,
) -> Result<GateDecision, GateError> {
    let started_at = now();
    let (answer, oracle_error) = match oracle.judge(p, w) {
        Ok(a) => (a, None),
        Err(e) => (OracleAnswer::unknown(), Some(e.to_string())),
    };
    let allow = match answer.kind {
        AnswerKind::Harmful => false,
        AnswerKind::Safe => true,
        AnswerKind::Unknown => policy == Policy::FailOpen,
    };
    let mut record = AuditRecord {
        program: p.machine.to_string(),
        input: w.clone(),
        oracle: oracle.name(),
        answer: answer.kind,
        justification: answer.justification,
        oracle_error,
        policy,
        executed: allow,
        outcome: None,
        started_at,
        finished_at: String::new(),
    };
    if !allow {
        record.finished_at = now();
        log.append(record)?;
        return Ok(GateDecision::Disabled(match answer.kind {
            AnswerKind::Harmful => DisableReason::Harmful,
            _ => DisableReason::Unknown,
        }));
    }
    let run = run_accelerated(&p.machine, w, lim);
    record.outcome = Some(run.kind);
    record.finished_at = now();
    log.append(record)?;
    Ok(GateDecision::Executed(run))
}
