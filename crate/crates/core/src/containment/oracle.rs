//! Harm oracles: things that look at a program and guess whether running
//! it will cause harm.

use std::fmt;
use std::io::Read;
use std::path::PathBuf;
use std::process::{Command, Stdio};
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::{harm_of, ContainedProgram, HarmLabel};
use crate::format::serialize;
use crate::machine::InputWord;
use crate::simulator::{run_accelerated, RunLimits};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnswerKind {
    Harmful,
    Safe,
    Unknown,
}

impl fmt::Display for AnswerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AnswerKind::Harmful => "harmful",
            AnswerKind::Safe => "safe",
            AnswerKind::Unknown => "unknown",
        })
    }
}

impl FromStr for AnswerKind {
    type Err = OracleError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "HARMFUL" => Ok(AnswerKind::Harmful),
            "SAFE" => Ok(AnswerKind::Safe),
            "UNKNOWN" => Ok(AnswerKind::Unknown),
            _ => Err(OracleError::BadAnswer(s.trim().to_string())),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleAnswer {
    pub kind: AnswerKind,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub justification: Option<String>,
}

impl OracleAnswer {
    pub fn new(kind: AnswerKind, justification: impl Into<String>) -> Self {
        OracleAnswer {
            kind,
            justification: Some(justification.into()),
        }
    }

    pub fn unknown() -> Self {
        OracleAnswer {
            kind: AnswerKind::Unknown,
            justification: None,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum OracleError {
    #[error("oracle process failed: {0}")]
    Io(#[from] std::io::Error),
    #[error("oracle timed out after {0:?}")]
    Timeout(Duration),
    #[error("oracle exited with {0}")]
    Exit(std::process::ExitStatus),
    #[error("oracle answered {0:?}; expected HARMFUL, SAFE or UNKNOWN")]
    BadAnswer(String),
    #[error("program cannot be passed to the oracle: {0}")]
    Unencodable(String),
}

pub trait HarmOracle: Sync {
    fn name(&self) -> String;

    /// Whether the oracle ever answers Unknown.
    fn is_total(&self) -> bool {
        false
    }

    fn judge(&self, p: &ContainedProgram, w: &InputWord) -> Result<OracleAnswer, OracleError>;
}

/// Simulates up to `budget` steps and reports what it saw. Never guesses.
#[derive(Clone, Copy, Debug)]
pub struct BoundedSimulation {
    pub budget: u64,
}

impl HarmOracle for BoundedSimulation {
    fn name(&self) -> String {
        format!("bounded-simulation({})", self.budget)
    }

    fn judge(&self, p: &ContainedProgram, w: &InputWord) -> Result<OracleAnswer, OracleError> {
        let run = run_accelerated(
            &p.machine,
            w,
            &RunLimits::steps(self.budget).with_snapshot_cells(0),
        );
        Ok(match (run.halted(), run.halted_via_gadget) {
            (true, true) => OracleAnswer::new(
                AnswerKind::Harmful,
                format!("gadget reached at step {}", run.steps),
            ),
            (true, false) => OracleAnswer::new(
                AnswerKind::Safe,
                format!("halted without harm at step {}", run.steps),
            ),
            _ => OracleAnswer::unknown(),
        })
    }
}

/// Simulation plus the certificate-producing deciders. Never guesses.
#[derive(Clone, Copy, Debug)]
pub struct DeciderOracle {
    pub budget: u64,
}

impl HarmOracle for DeciderOracle {
    fn name(&self) -> String {
        format!("deciders({})", self.budget)
    }

    fn judge(&self, p: &ContainedProgram, w: &InputWord) -> Result<OracleAnswer, OracleError> {
        let p = ContainedProgram {
            input: w.clone(),
            ..p.clone()
        };
        let label = harm_of(&p, &RunLimits::steps(self.budget));
        Ok(match label {
            HarmLabel::Unknown { .. } => OracleAnswer::unknown(),
            l => OracleAnswer::new(l.kind(), l.to_string()),
        })
    }
}

/// Always answers: Harmful if the gadget is reached within `budget` steps,
/// Safe otherwise. Wrong on anything harming later.
#[derive(Clone, Copy, Debug)]
pub struct BoundedGuess {
    pub budget: u64,
}

impl HarmOracle for BoundedGuess {
    fn name(&self) -> String {
        format!("bounded-guess({})", self.budget)
    }

    fn is_total(&self) -> bool {
        true
    }

    fn judge(&self, p: &ContainedProgram, w: &InputWord) -> Result<OracleAnswer, OracleError> {
        let answer = BoundedSimulation {
            budget: self.budget,
        }
        .judge(p, w)?;
        Ok(match answer.kind {
            AnswerKind::Unknown => OracleAnswer::new(
                AnswerKind::Safe,
                format!("no harm within {} steps", self.budget),
            ),
            _ => answer,
        })
    }
}

#[derive(Clone, Copy, Debug)]
pub struct AlwaysSafe;

impl HarmOracle for AlwaysSafe {
    fn name(&self) -> String {
        "always-safe".to_string()
    }

    fn is_total(&self) -> bool {
        true
    }

    fn judge(&self, _: &ContainedProgram, _: &InputWord) -> Result<OracleAnswer, OracleError> {
        Ok(OracleAnswer {
            kind: AnswerKind::Safe,
            justification: None,
        })
    }
}

/// An executable run as `program ARGS... <machine> <input> <budget>`. The
/// first line of its standard output is `HARMFUL`, `SAFE` or `UNKNOWN`; any
/// further output is kept as the justification.
#[derive(Clone, Debug)]
pub struct ExternalOracle {
    pub program: PathBuf,
    pub args: Vec<String>,
    pub budget: u64,
    pub timeout: Duration,
}

impl ExternalOracle {
    pub fn new(program: impl Into<PathBuf>, budget: u64) -> Self {
        ExternalOracle {
            program: program.into(),
            args: Vec::new(),
            budget,
            timeout: Duration::from_secs(30),
        }
    }
}

impl HarmOracle for ExternalOracle {
    fn name(&self) -> String {
        format!("external({})", self.program.display())
    }

    fn judge(&self, p: &ContainedProgram, w: &InputWord) -> Result<OracleAnswer, OracleError> {
        let text = serialize(&p.machine).map_err(|e| OracleError::Unencodable(e.to_string()))?;
        let mut child = Command::new(&self.program)
            .args(&self.args)
            .arg(text)
            .arg(w.to_string())
            .arg(self.budget.to_string())
            .stdin(Stdio::null())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()?;
        let mut stdout = child.stdout.take().expect("piped stdout");
        let reader = std::thread::spawn(move || {
            let mut s = String::new();
            stdout.read_to_string(&mut s).map(|_| s)
        });
        let deadline = Instant::now() + self.timeout;
        let status = loop {
            if let Some(status) = child.try_wait()? {
                break status;
            }
            if Instant::now() >= deadline {
                let _ = child.kill();
                let _ = child.wait();
                return Err(OracleError::Timeout(self.timeout));
            }
            std::thread::sleep(Duration::from_millis(5));
        };
        let out = reader.join().expect("reader thread")?;
        if !status.success() {
            return Err(OracleError::Exit(status));
        }
        let (first, rest) = out.split_once('\n').unwrap_or((&out, ""));
        let rest = rest.trim();
        Ok(OracleAnswer {
            kind: first.parse()?,
            justification: (!rest.is_empty()).then(|| rest.to_string()),
        })
    }
}
