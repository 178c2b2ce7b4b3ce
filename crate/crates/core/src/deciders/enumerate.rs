//! Tree-normal-form enumeration of busy beaver candidates.
//!
//! Starting from a root with every entry undefined (for `n >= 2`, `A0` is
//! fixed to `1RB`), each machine is run on the blank tape. When it stops on
//! an undefined entry, that entry is filled in every way: with `1RZ`, which
//! gives a halting leaf, and with every write, direction and target among
//! the states used so far plus the first unused one. Machines that do not
//! halt within the budget go to the non-halting deciders; whatever they
//! cannot settle is a holdout. Complete tables with no `Z`
//! entry are settled without simulation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{decide_no_halting_entry, decide_nonhalting, Verdict};
use crate::format::{serialize, MAX_TEXT_STATES};
use crate::machine::{Control, Dir, InputWord, Machine, StateId, Transition, BLANK};
use crate::simulator::{run_direct_with_tape, RunLimits};
use crate::tape::Tape;

/// Steps allowed per machine when no budget is given.
pub const DEFAULT_ENUMERATION_BUDGET: u64 = 100_000;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Classified {
    pub text: String,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub machines: u64,
    pub halting: u64,
    pub never_halting: u64,
    pub holdouts: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnumerationReport {
    pub n: usize,
    pub budget: u64,
    /// Most marks left by a halting machine found.
    pub sigma: u64,
    /// Most steps taken by a halting machine found.
    pub s: u64,
    pub sigma_champions: Vec<String>,
    pub s_champions: Vec<String>,
    /// Machines nothing was established about. Empty means `sigma` and `s`
    /// are exact for the class.
    pub holdouts: Vec<String>,
    pub counts: Counts,
}

impl EnumerationReport {
    pub fn is_closed(&self) -> bool {
        self.holdouts.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum EnumerationError {
    #[error("state count must be between 1 and {MAX_TEXT_STATES}, got {0}")]
    StateCount(usize),
}

fn text(m: &Machine) -> String {
    serialize(m).expect("enumerated machines fit the text format")
}

fn root(n: usize) -> Machine {
    let mut m = Machine::new(n);
    if n >= 2 {
        m.set(StateId(0), 0, Some(Transition::to(1, Dir::R, 1)));
    }
    m
}

/// Targets allowed for a new transition: used states plus the first unused.
fn target_limit(m: &Machine) -> u16 {
    let used = m
        .rows()
        .iter()
        .flatten()
        .flatten()
        .filter_map(|t| t.next.state())
        .map(|s| s.0)
        .max()
        .unwrap_or(0);
    (used + 1).min(m.n_states() as u16 - 1)
}

fn explore(m: Machine, limits: &RunLimits) -> Vec<Classified> {
    if let Some(verdict) = decide_no_halting_entry(&m) {
        return vec![Classified {
            text: text(&m),
            verdict,
        }];
    }
    let (run, tape) = run_direct_with_tape(&m, &InputWord::empty(), limits);
    let mut out = Vec::new();
    if !run.halted() {
        let verdict = decide_nonhalting(&m, &InputWord::empty(), limits);
        out.push(Classified {
            text: text(&m),
            verdict,
        });
        return out;
    }
    let steps = run.steps_u64().expect("step count within budget");
    out.push(Classified {
        text: text(&m),
        verdict: Verdict::Halts {
            steps,
            marks: run.marks,
        },
    });
    let Control::State(q) = run.final_state else {
        unreachable!("enumerated machines have no halting transitions before the leaf");
    };
    let read = tape.cell(run.head);

    let mut leaf = m.clone();
    leaf.set(q, read, Some(Transition::halt(1, Dir::R)));
    out.push(Classified {
        text: text(&leaf),
        verdict: Verdict::Halts {
            steps,
            marks: run.marks + (read == BLANK) as u64,
        },
    });

    let limit = target_limit(&m);
    let children: Vec<Machine> = (0..=limit)
        .flat_map(|next| {
            [0u8, 1].into_iter().flat_map(move |write| {
                [Dir::L, Dir::R]
                    .into_iter()
                    .map(move |dir| Transition::to(write, dir, next))
            })
        })
        .map(|t| {
            let mut child = m.clone();
            child.set(q, read, Some(t));
            child
        })
        .collect();
    let nested: Vec<Vec<Classified>> = children
        .into_par_iter()
        .map(|c| explore(c, limits))
        .collect();
    out.extend(nested.into_iter().flatten());
    out
}

/// Every machine visited by the enumeration, sorted by text.
pub fn enumerate_machines(n: usize, budget: u64) -> Result<Vec<Classified>, EnumerationError> {
    if n == 0 || n > MAX_TEXT_STATES {
        return Err(EnumerationError::StateCount(n));
    }
    let limits = RunLimits::steps(budget).with_snapshot_cells(0);
    let mut all = explore(root(n), &limits);
    all.sort_by(|a, b| a.text.cmp(&b.text));
    Ok(all)
}

pub fn enumerate(n: usize, budget: u64) -> Result<EnumerationReport, EnumerationError> {
    let all = enumerate_machines(n, budget)?;
    let mut report = EnumerationReport {
        n,
        budget,
        sigma: 0,
        s: 0,
        sigma_champions: Vec::new(),
        s_champions: Vec::new(),
        holdouts: Vec::new(),
        counts: Counts::default(),
    };
    for c in &all {
        report.counts.machines += 1;
        match c.verdict {
            Verdict::Halts { steps, marks } => {
                report.counts.halting += 1;
                if marks > report.sigma {
                    report.sigma = marks;
                    report.sigma_champions.clear();
                }
                if marks == report.sigma {
                    report.sigma_champions.push(c.text.clone());
                }
                if steps > report.s {
                    report.s = steps;
                    report.s_champions.clear();
                }
                if steps == report.s {
                    report.s_champions.push(c.text.clone());
                }
            }
            Verdict::NeverHalts { .. } => report.counts.never_halting += 1,
            Verdict::Unknown { .. } => {
                report.counts.holdouts += 1;
                report.holdouts.push(c.text.clone());
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_state_class() {
        let r = enumerate(1, 1000).unwrap();
        assert_eq!((r.sigma, r.s), (1, 1));
        assert!(r.is_closed());
        assert!(r.sigma_champions.contains(&"1RZ---".to_string()));
    }

    #[test]
    fn two_state_class() {
        let r = enumerate(2, DEFAULT_ENUMERATION_BUDGET).unwrap();
        assert_eq!((r.sigma, r.s), (4, 6));
        assert!(r.is_closed(), "{:?}", r.holdouts);
        assert!(r.sigma_champions.contains(&"1RB1LB_1LA1RZ".to_string()));
    }

    #[test]
    fn three_state_class() {
        let r = enumerate(3, DEFAULT_ENUMERATION_BUDGET).unwrap();
        assert_eq!((r.sigma, r.s), (6, 21), "{:?}", r.holdouts);
        assert!(r.is_closed(), "{:?}", r.holdouts);
    }

    #[test]
    fn output_is_deterministic() {
        assert_eq!(
            enumerate_machines(2, 1000).unwrap(),
            enumerate_machines(2, 1000).unwrap()
        );
    }

    #[test]
    fn bad_state_counts() {
        assert_eq!(enumerate(0, 10), Err(EnumerationError::StateCount(0)));
        assert_eq!(enumerate(26, 10), Err(EnumerationError::StateCount(26)));
    }
}
