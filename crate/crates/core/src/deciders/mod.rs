//! Sound, certificate-producing partial halting deciders.
//!
//! Every `NeverHalts` verdict carries a [`Certificate`] that
//! [`Certificate::replay`] re-checks by plain re-simulation, independently of
//! the search that found it. `Unknown` is never a proof of anything.

mod backward;
mod certificate;
mod cps;
mod cycler;
pub mod enumerate;
mod far;
mod translated;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::machine::{InputWord, Machine};
use crate::simulator::{run_accelerated, RunLimits};

pub use certificate::{Certificate, ReplayError};
pub use enumerate::{
    enumerate, enumerate_machines, Classified, Counts, EnumerationError, EnumerationReport,
    DEFAULT_ENUMERATION_BUDGET,
};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    Halts {
        steps: u64,
        marks: u64,
    },
    NeverHalts {
        certificate: Certificate,
    },
    /// Nothing established within `budget` simulated steps.
    Unknown {
        budget: u64,
    },
}

impl Verdict {
    pub fn is_unknown(&self) -> bool {
        matches!(self, Verdict::Unknown { .. })
    }

    pub fn certificate(&self) -> Option<&Certificate> {
        match self {
            Verdict::NeverHalts { certificate } => Some(certificate),
            _ => None,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Halts { steps, marks } => write!(f, "halts steps={steps} marks={marks}"),
            Verdict::NeverHalts { certificate } => write!(f, "never halts ({certificate})"),
            Verdict::Unknown { budget } => write!(f, "unknown after {budget} steps"),
        }
    }
}

fn budget_steps(budget: &RunLimits) -> u64 {
    budget.max_steps_u64()
}

/// Exact-cycle decider on the blank tape.
pub fn decide_cyclers(m: &Machine, budget: &RunLimits) -> Verdict {
    decide_cyclers_on(m, &InputWord::empty(), budget)
}

pub fn decide_cyclers_on(m: &Machine, w: &InputWord, budget: &RunLimits) -> Verdict {
    cycler::decide(m, w, budget_steps(budget))
}

/// Translated-cycle decider on the blank tape.
pub fn decide_translated_cyclers(m: &Machine, budget: &RunLimits) -> Verdict {
    decide_translated_cyclers_on(m, &InputWord::empty(), budget)
}

pub fn decide_translated_cyclers_on(m: &Machine, w: &InputWord, budget: &RunLimits) -> Verdict {
    translated::decide(m, w, budget_steps(budget))
}

/// Backward reasoning from every halting entry, to a bounded depth.
pub fn decide_backward(m: &Machine) -> Verdict {
    decide_backward_on(m, &InputWord::empty())
}

pub fn decide_backward_on(m: &Machine, w: &InputWord) -> Verdict {
    backward::decide(m, w)
}

/// Closed n-gram position sets for growing context lengths.
pub fn decide_position_set(m: &Machine) -> Verdict {
    decide_position_set_on(m, &InputWord::empty())
}

pub fn decide_position_set_on(m: &Machine, w: &InputWord) -> Verdict {
    cps::decide(m, w)
}

/// Finite automata reduction with small left-half DFAs.
pub fn decide_automaton(m: &Machine) -> Verdict {
    decide_automaton_on(m, &InputWord::empty())
}

pub fn decide_automaton_on(m: &Machine, w: &InputWord) -> Verdict {
    far::decide(m, w)
}

/// Certifies tables that are complete and never enter `Z`.
pub fn decide_no_halting_entry(m: &Machine) -> Option<Verdict> {
    let certificate = Certificate::NoHaltingEntry;
    certificate
        .replay(m, &InputWord::empty())
        .ok()
        .map(|()| Verdict::NeverHalts { certificate })
}

/// Table check, simulation, then the non-halting deciders.
pub fn decide(m: &Machine, w: &InputWord, budget: &RunLimits) -> Verdict {
    if let Some(v) = decide_no_halting_entry(m) {
        return v;
    }
    let run = run_accelerated(m, w, budget);
    if run.halted() {
        return Verdict::Halts {
            steps: run.steps_u64().expect("halting run within a u64 budget"),
            marks: run.marks,
        };
    }
    decide_nonhalting(m, w, budget)
}

/// The cycle deciders, backward reasoning, closed position sets, then
/// finite automata reduction; the first settled verdict. The cycle deciders
/// may still find the machine halting within `budget`.
pub fn decide_nonhalting(m: &Machine, w: &InputWord, budget: &RunLimits) -> Verdict {
    let v = decide_cyclers_on(m, w, budget);
    if !v.is_unknown() {
        return v;
    }
    let v = decide_translated_cyclers_on(m, w, budget);
    if !v.is_unknown() {
        return v;
    }
    let v = decide_backward_on(m, w);
    if !v.is_unknown() {
        return v;
    }
    let v = decide_position_set_on(m, w);
    if !v.is_unknown() {
        return v;
    }
    match decide_automaton_on(m, w) {
        Verdict::Unknown { .. } => Verdict::Unknown {
            budget: budget_steps(budget),
        },
        v => v,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "answer", rename_all = "snake_case")]
pub enum ThresholdAnswer {
    /// Halts leaving more than `k` marks.
    Above {
        steps: u64,
        marks: u64,
    },
    /// Halts with at most `k` marks, or certainly never halts.
    NotAbove {
        evidence: Verdict,
    },
    Unknown {
        budget: u64,
    },
}

impl fmt::Display for ThresholdAnswer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ThresholdAnswer::Above { steps, marks } => {
                write!(f, "above (halts steps={steps} marks={marks})")
            }
            ThresholdAnswer::NotAbove { evidence } => write!(f, "not above ({evidence})"),
            ThresholdAnswer::Unknown { budget } => write!(f, "unknown after {budget} steps"),
        }
    }
}

/// Decides whether `m`, started on the blank tape, halts with more than `k`
/// marks. The comparison is strict.
pub fn busy_beaver_threshold(m: &Machine, k: u64, budget: &RunLimits) -> ThresholdAnswer {
    match decide(m, &InputWord::empty(), budget) {
        Verdict::Halts { steps, marks } if marks > k => ThresholdAnswer::Above { steps, marks },
        v @ (Verdict::Halts { .. } | Verdict::NeverHalts { .. }) => {
            ThresholdAnswer::NotAbove { evidence: v }
        }
        Verdict::Unknown { budget } => ThresholdAnswer::Unknown { budget },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::format::parse;

    const CHAMPION_5: &str = "1RB1LC_1RC1RB_1RD0LE_1LA1LD_1RZ0LA";

    #[test]
    fn bouncer_is_an_exact_cycle() {
        let m = parse("0RB---_0LA---").unwrap();
        let v = decide_cyclers(&m, &RunLimits::steps(1000));
        assert_eq!(
            v,
            Verdict::NeverHalts {
                certificate: Certificate::ExactCycle {
                    start: 0,
                    period: 2
                }
            }
        );
        v.certificate()
            .unwrap()
            .replay(&m, &InputWord::empty())
            .unwrap();
    }

    #[test]
    fn halter_halts() {
        let m = parse("1RZ---").unwrap();
        let expected = Verdict::Halts { steps: 1, marks: 1 };
        assert_eq!(decide_cyclers(&m, &RunLimits::steps(100)), expected);
        assert_eq!(
            decide_translated_cyclers(&m, &RunLimits::steps(100)),
            expected
        );
    }

    #[test]
    fn champion_with_small_budget_is_unknown() {
        let m = parse(CHAMPION_5).unwrap();
        assert!(decide_cyclers(&m, &RunLimits::steps(10_000)).is_unknown());
    }

    #[test]
    fn right_forever_is_a_translated_cycle() {
        let m = parse("1RA1RA").unwrap();
        let v = decide_translated_cyclers(&m, &RunLimits::steps(1000));
        assert_eq!(
            v,
            Verdict::NeverHalts {
                certificate: Certificate::TranslatedCycle {
                    start: 0,
                    period: 1,
                    offset: 1
                }
            }
        );
    }

    #[test]
    fn holdouts_stay_unknown() {
        for e in crate::corpus::holdouts() {
            let b = RunLimits::steps(100_000);
            assert!(decide_cyclers(&e.machine, &b).is_unknown(), "{}", e.name);
            assert!(
                decide_translated_cyclers(&e.machine, &b).is_unknown(),
                "{}",
                e.name
            );
        }
    }

    #[test]
    fn threshold_boundary_on_champion() {
        let m = parse(CHAMPION_5).unwrap();
        let b = RunLimits::default();
        assert_eq!(
            busy_beaver_threshold(&m, 4097, &b),
            ThresholdAnswer::Above {
                steps: 47_176_870,
                marks: 4098
            }
        );
        assert_eq!(
            busy_beaver_threshold(&m, 4098, &b),
            ThresholdAnswer::NotAbove {
                evidence: Verdict::Halts {
                    steps: 47_176_870,
                    marks: 4098
                }
            }
        );
    }

    #[test]
    fn certified_nonhalter_is_not_above() {
        let m = parse("0RB---_0LA---").unwrap();
        assert!(matches!(
            busy_beaver_threshold(&m, 0, &RunLimits::steps(1000)),
            ThresholdAnswer::NotAbove {
                evidence: Verdict::NeverHalts { .. }
            }
        ));
    }

    #[test]
    fn holdout_threshold_is_unknown() {
        for e in crate::corpus::holdouts() {
            assert!(matches!(
                busy_beaver_threshold(&e.machine, 100, &RunLimits::steps(200_000)),
                ThresholdAnswer::Unknown { .. }
            ));
        }
    }

    #[test]
    fn verdict_serialization() {
        let v = Verdict::NeverHalts {
            certificate: Certificate::TranslatedCycle {
                start: 3,
                period: 4,
                offset: -2,
            },
        };
        let json = serde_json::to_string(&v).unwrap();
        assert_eq!(
            json,
            r#"{"verdict":"never_halts","certificate":{"kind":"translated_cycle","start":3,"period":4,"offset":-2}}"#
        );
        assert_eq!(serde_json::from_str::<Verdict>(&json).unwrap(), v);
    }
}
