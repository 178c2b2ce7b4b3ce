//! Harm as an observable event, and the reduction from halting to harm.
//!
//! Harm is entering the two-state gadget appended by [`make_halt_harm`]: `G1`
//! writes a mark and moves right, `G2` writes a mark, moves left and halts.
//! A run "harms" exactly when it halts from `G2`, which the simulators report
//! as `halted_via_gadget`. Raw machines carry no gadget and so never harm,
//! whatever else they do.

mod eval;
mod gate;
mod oracle;

use std::fmt;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::deciders::{decide_nonhalting, Certificate, Verdict};
use crate::format::MAX_TEXT_STATES;
use crate::machine::{Control, Dir, InputWord, Machine, StateId, Transition};
use crate::simulator::{run_accelerated, RunLimits};

pub use eval::{
    bundled_programs, evaluate_oracle, label_corpus, LabeledProgram, ScoreItem, Scorecard, Tallies,
};
pub use gate::{
    control_gate, AuditLog, AuditRecord, DisableReason, GateDecision, GateError, Policy,
};
pub use oracle::{
    AlwaysSafe, AnswerKind, BoundedGuess, BoundedSimulation, DeciderOracle, ExternalOracle,
    HarmOracle, OracleAnswer, OracleError,
};

/// Largest machine [`make_halt_harm`] accepts; the result still fits the
/// text format.
pub const MAX_HALT_HARM_STATES: usize = MAX_TEXT_STATES - 2;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ContainmentError {
    #[error("machine has {0} states; halt-harm compilation takes at most {MAX_HALT_HARM_STATES}")]
    TooManyStates(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Origin {
    Raw,
    /// Compiled from `source`, to be run on `input`.
    HaltHarm {
        source: Machine,
        input: InputWord,
    },
}

/// A program whose runs are subject to the gate, with the input it is
/// evaluated on.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContainedProgram {
    pub machine: Machine,
    pub input: InputWord,
    pub origin: Origin,
}

impl ContainedProgram {
    pub fn raw(machine: Machine, input: InputWord) -> Self {
        ContainedProgram {
            machine,
            input,
            origin: Origin::Raw,
        }
    }
}

/// Compiles `t` so that the result, run on `i`, enters the harm gadget iff
/// `t` halts on `i`. Every `Z` transition keeps its write and move and goes
/// to `G1` instead; every undefined entry rewrites the symbol it reads,
/// moves right and goes to `G1`. Nothing else changes. A halting run takes
/// two extra steps.
pub fn make_halt_harm(t: &Machine, i: &InputWord) -> Result<ContainedProgram, ContainmentError> {
    let n = t.n_states();
    if n > MAX_HALT_HARM_STATES {
        return Err(ContainmentError::TooManyStates(n));
    }
    let g1 = n as u16;
    let mut rows: Vec<[Option<Transition>; 2]> = t
        .rows()
        .iter()
        .map(|row| {
            let mut out = *row;
            for (read, slot) in out.iter_mut().enumerate() {
                *slot = Some(match *slot {
                    Some(t) if t.next == Control::Halt => Transition::to(t.write, t.dir, g1),
                    Some(t) => t,
                    None => Transition::to(read as u8, Dir::R, g1),
                });
            }
            out
        })
        .collect();
    rows.push([Some(Transition::to(1, Dir::R, g1 + 1)); 2]);
    rows.push([Some(Transition::halt(1, Dir::L)); 2]);
    Ok(ContainedProgram {
        machine: Machine::from_rows(rows).with_gadget(StateId(g1)),
        input: i.clone(),
        origin: Origin::HaltHarm {
            source: t.clone(),
            input: i.clone(),
        },
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "evidence", rename_all = "snake_case")]
pub enum SafetyEvidence {
    /// The program never halts, so it never reaches the gadget.
    Certified { certificate: Certificate },
    /// The program halted without passing through the gadget.
    HaltedHarmlessly {
        #[serde(with = "crate::record::decimal")]
        steps: BigUint,
    },
}

/// Ground truth as far as simulation and the deciders can establish it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "label", rename_all = "snake_case")]
pub enum HarmLabel {
    Harmful {
        #[serde(with = "crate::record::decimal")]
        steps: BigUint,
    },
    Safe {
        #[serde(flatten)]
        evidence: SafetyEvidence,
    },
    Unknown {
        budget: u64,
    },
}

impl HarmLabel {
    pub fn kind(&self) -> AnswerKind {
        match self {
            HarmLabel::Harmful { .. } => AnswerKind::Harmful,
            HarmLabel::Safe { .. } => AnswerKind::Safe,
            HarmLabel::Unknown { .. } => AnswerKind::Unknown,
        }
    }
}

impl fmt::Display for HarmLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HarmLabel::Harmful { steps } => write!(f, "harmful steps={steps}"),
            HarmLabel::Safe {
                evidence: SafetyEvidence::Certified { certificate },
            } => write!(f, "safe ({certificate})"),
            HarmLabel::Safe {
                evidence: SafetyEvidence::HaltedHarmlessly { steps },
            } => write!(f, "safe (halted without harm, steps={steps})"),
            HarmLabel::Unknown { budget } => write!(f, "unknown after {budget} steps"),
        }
    }
}

/// Harmful iff a run within `lim` halts through the gadget; Safe iff the run
/// halts elsewhere or a decider certifies it never halts; Unknown otherwise.
pub fn harm_of(p: &ContainedProgram, lim: &RunLimits) -> HarmLabel {
    let lim = lim.clone().with_snapshot_cells(0);
    let run = run_accelerated(&p.machine, &p.input, &lim);
    if run.halted() {
        return if run.halted_via_gadget {
            HarmLabel::Harmful { steps: run.steps }
        } else {
            HarmLabel::Safe {
                evidence: SafetyEvidence::HaltedHarmlessly { steps: run.steps },
            }
        };
    }
    match decide_nonhalting(&p.machine, &p.input, &lim) {
        Verdict::NeverHalts { certificate } => HarmLabel::Safe {
            evidence: SafetyEvidence::Certified { certificate },
        },
        // Halting beyond the first run would need a larger budget.
        _ => HarmLabel::Unknown {
            budget: lim.max_steps_u64(),
        },
    }
}
