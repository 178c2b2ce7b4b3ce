//! Non-halting certificates and their replay check.
//!
//! The checker keeps its own sparse tape so that it shares no code with the
//! searches that produce certificates.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::machine::{Control, InputWord, Machine, StateId, MARK};

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Certificate {
    /// The configuration after `start + period` steps equals the one after
    /// `start` steps.
    ExactCycle { start: u64, period: u64 },
    /// The configuration after `start + period` steps equals the one after
    /// `start` steps shifted by `offset` cells, on every cell the head can
    /// reach.
    TranslatedCycle {
        start: u64,
        period: u64,
        offset: i64,
    },
    /// Every entry is defined and none leads to `Z`, so no step can halt.
    NoHaltingEntry,
    /// No configuration has a chain of `depth` predecessors ending in a
    /// halt, and the run does not halt within `depth` steps.
    BackwardRefutation { depth: u32 },
    /// The closed set of abstract configurations with `n` context cells per
    /// side contains no halting entry.
    ClosedPositionSet { n: u8 },
    /// A regular language of configurations, built from this left-half DFA,
    /// holds every configuration that halts and not the start.
    FiniteAutomaton { dfa: Vec<[u8; 2]>, mirrored: bool },
}

impl fmt::Display for Certificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Certificate::ExactCycle { start, period } => {
                write!(f, "cycle start={start} period={period}")
            }
            Certificate::TranslatedCycle {
                start,
                period,
                offset,
            } => {
                write!(
                    f,
                    "translated cycle start={start} period={period} offset={offset:+}"
                )
            }
            Certificate::NoHaltingEntry => f.write_str("no halting entry"),
            Certificate::BackwardRefutation { depth } => {
                write!(f, "backward refutation depth={depth}")
            }
            Certificate::ClosedPositionSet { n } => write!(f, "closed position set n={n}"),
            Certificate::FiniteAutomaton { dfa, mirrored } => {
                write!(f, "finite automaton dfa={}", dfa.len())?;
                if *mirrored {
                    f.write_str(" mirrored")?;
                }
                Ok(())
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ReplayError {
    #[error("period must be positive")]
    ZeroPeriod,
    #[error("translation offset must be nonzero")]
    ZeroOffset,
    #[error("machine halts at step {0}")]
    Halted(u64),
    #[error("state differs: {first} at the start, {second} after one period")]
    StateMismatch { first: Control, second: Control },
    #[error("head moved by {found}, certificate says {expected}")]
    OffsetMismatch { expected: i64, found: i64 },
    #[error("tape differs after one period")]
    TapeMismatch,
    #[error("the table has a halting entry")]
    HaltingEntry,
    #[error("a halting chain survives {0} steps back")]
    ChainSurvives(u32),
    #[error("the position set with {0} context cells reaches a halting entry")]
    NotClosed(u8),
    #[error("the automaton is not closed or accepts the start")]
    NotClosedAutomaton,
}

struct Sparse {
    state: Control,
    head: i64,
    marks: BTreeSet<i64>,
    steps: u64,
}

impl Sparse {
    fn new(w: &InputWord) -> Self {
        let marks = (0..)
            .zip(w.symbols())
            .filter(|&(_, &s)| s == MARK)
            .map(|(i, _)| i)
            .collect();
        Sparse {
            state: Control::State(StateId::START),
            head: 0,
            marks,
            steps: 0,
        }
    }

    /// One step; an error if it halts.
    fn step(&mut self, m: &Machine) -> Result<(), ReplayError> {
        let Control::State(q) = self.state else {
            return Err(ReplayError::Halted(self.steps));
        };
        self.steps += 1;
        let read = self.marks.contains(&self.head) as u8;
        let t = m.get(q, read).ok_or(ReplayError::Halted(self.steps))?;
        if t.write == MARK {
            self.marks.insert(self.head);
        } else {
            self.marks.remove(&self.head);
        }
        self.head += t.dir.delta();
        self.state = t.next;
        if self.state == Control::Halt {
            return Err(ReplayError::Halted(self.steps));
        }
        Ok(())
    }

    fn relative(&self, keep: impl Fn(i64) -> bool) -> Vec<i64> {
        self.marks
            .iter()
            .map(|&i| i - self.head)
            .filter(|&r| keep(r))
            .collect()
    }
}

impl Certificate {
    /// Re-checks the certificate for `m` on `w` from scratch.
    pub fn replay(&self, m: &Machine, w: &InputWord) -> Result<(), ReplayError> {
        match self {
            Certificate::ExactCycle { start, period } => replay_cycle(m, w, *start, *period, 0),
            Certificate::TranslatedCycle { offset: 0, .. } => Err(ReplayError::ZeroOffset),
            Certificate::TranslatedCycle {
                start,
                period,
                offset,
            } => replay_cycle(m, w, *start, *period, *offset),
            Certificate::NoHaltingEntry => {
                let halting = m
                    .rows()
                    .iter()
                    .flatten()
                    .any(|t| t.is_none_or(|t| t.next == Control::Halt));
                if halting {
                    Err(ReplayError::HaltingEntry)
                } else {
                    Ok(())
                }
            }
            Certificate::BackwardRefutation { depth } => replay_backward(m, w, *depth),
            Certificate::ClosedPositionSet { n } => {
                if super::cps::check_closed(m, w, *n) {
                    Ok(())
                } else {
                    Err(ReplayError::NotClosed(*n))
                }
            }
            Certificate::FiniteAutomaton { dfa, mirrored } => {
                let valid = !dfa.is_empty()
                    && dfa.len() <= 16
                    && dfa[0][0] == 0
                    && dfa.iter().flatten().all(|&d| (d as usize) < dfa.len());
                let nfa = valid
                    .then(|| super::far::solve(m, w, dfa, *mirrored))
                    .flatten();
                match nfa {
                    Some(nfa) if super::far::verify(m, w, &nfa, *mirrored) => Ok(()),
                    _ => Err(ReplayError::NotClosedAutomaton),
                }
            }
        }
    }
}

/// Runs `start` steps, then `period` more, and compares the two
/// configurations; `expected` is the head shift, zero for an exact cycle.
fn replay_cycle(
    m: &Machine,
    w: &InputWord,
    start: u64,
    period: u64,
    expected: i64,
) -> Result<(), ReplayError> {
    if period == 0 {
        return Err(ReplayError::ZeroPeriod);
    }
    let mut c = Sparse::new(w);
    for _ in 0..start {
        c.step(m)?;
    }
    let (state0, head0, marks0) = (c.state, c.head, c.marks.clone());
    let (mut lo, mut hi) = (head0, head0);
    for _ in 0..period {
        c.step(m)?;
        lo = lo.min(c.head);
        hi = hi.max(c.head);
    }
    if c.state != state0 {
        return Err(ReplayError::StateMismatch {
            first: state0,
            second: c.state,
        });
    }
    let found = c.head - head0;
    if found != expected {
        return Err(ReplayError::OffsetMismatch { expected, found });
    }
    let same = match expected {
        0 => c.marks == marks0,
        d => {
            let first = Sparse {
                state: state0,
                head: head0,
                marks: marks0,
                steps: 0,
            };
            let (a, b) = if d > 0 {
                let w = head0 - lo;
                (first.relative(|r| r >= -w), c.relative(|r| r >= -w))
            } else {
                let w = hi - head0;
                (first.relative(|r| r <= w), c.relative(|r| r <= w))
            };
            a == b
        }
    };
    if same {
        Ok(())
    } else {
        Err(ReplayError::TapeMismatch)
    }
}

/// Depth-first: can a chain of `left` more predecessors be built?
fn chain_exists(
    m: &Machine,
    state: StateId,
    head: i64,
    known: &mut HashMap<i64, u8>,
    left: u32,
) -> bool {
    if left == 0 {
        return true;
    }
    for (q, row) in m.rows().iter().enumerate() {
        for (s, t) in row.iter().enumerate() {
            let Some(t) = t else { continue };
            if t.next != Control::State(state) {
                continue;
            }
            let cell = head - t.dir.delta();
            let before = known.get(&cell).copied();
            if before.is_some_and(|c| c != t.write) {
                continue;
            }
            known.insert(cell, s as u8);
            let found = chain_exists(m, StateId(q as u16), cell, known, left - 1);
            match before {
                Some(c) => known.insert(cell, c),
                None => known.remove(&cell),
            };
            if found {
                return true;
            }
        }
    }
    false
}

fn replay_backward(m: &Machine, w: &InputWord, depth: u32) -> Result<(), ReplayError> {
    for (q, row) in m.rows().iter().enumerate() {
        for (s, t) in row.iter().enumerate() {
            let halts = match t {
                None => true,
                Some(t) => t.next == Control::Halt,
            };
            let mut known = HashMap::from([(0, s as u8)]);
            if halts && chain_exists(m, StateId(q as u16), 0, &mut known, depth) {
                return Err(ReplayError::ChainSurvives(depth));
            }
        }
    }
    let mut c = Sparse::new(w);
    for _ in 0..depth {
        c.step(m)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::format::parse;

    #[test]
    fn off_by_one_periods_fail() {
        let m = parse("0RB---_0LA---").unwrap();
        let w = InputWord::empty();
        assert!(Certificate::ExactCycle {
            start: 0,
            period: 2
        }
        .replay(&m, &w)
        .is_ok());
        assert!(Certificate::ExactCycle {
            start: 0,
            period: 1
        }
        .replay(&m, &w)
        .is_err());
        assert!(Certificate::ExactCycle {
            start: 0,
            period: 3
        }
        .replay(&m, &w)
        .is_err());
        assert_eq!(
            Certificate::ExactCycle {
                start: 0,
                period: 0
            }
            .replay(&m, &w),
            Err(ReplayError::ZeroPeriod)
        );
    }

    #[test]
    fn translated_mutations_fail() {
        let m = parse("1RA1RA").unwrap();
        let w = InputWord::empty();
        assert!(Certificate::TranslatedCycle {
            start: 0,
            period: 1,
            offset: 1
        }
        .replay(&m, &w)
        .is_ok());
        assert!(Certificate::TranslatedCycle {
            start: 0,
            period: 2,
            offset: 1
        }
        .replay(&m, &w)
        .is_err());
        assert!(Certificate::TranslatedCycle {
            start: 0,
            period: 1,
            offset: 2
        }
        .replay(&m, &w)
        .is_err());
        assert!(Certificate::ExactCycle {
            start: 0,
            period: 1
        }
        .replay(&m, &w)
        .is_err());
    }

    #[test]
    fn halting_machine_fails_replay() {
        let m = parse("1RB---_1LA1RZ").unwrap();
        assert!(matches!(
            Certificate::ExactCycle {
                start: 0,
                period: 10
            }
            .replay(&m, &InputWord::empty()),
            Err(ReplayError::Halted(_))
        ));
    }

    #[test]
    fn no_halting_entry() {
        let w = InputWord::empty();
        let c = Certificate::NoHaltingEntry;
        assert!(c.replay(&parse("1RB1LA_0LA0RB").unwrap(), &w).is_ok());
        assert_eq!(
            c.replay(&parse("1RB1LA_0LA---").unwrap(), &w),
            Err(ReplayError::HaltingEntry)
        );
        assert_eq!(
            c.replay(&parse("1RB1LA_0LA1RZ").unwrap(), &w),
            Err(ReplayError::HaltingEntry)
        );
    }

    #[test]
    fn backward_depth_must_suffice() {
        let m = parse("1RB1LA_0LA0LC_---1RA").unwrap();
        let w = InputWord::empty();
        assert!(Certificate::BackwardRefutation { depth: 3 }
            .replay(&m, &w)
            .is_ok());
        assert_eq!(
            Certificate::BackwardRefutation { depth: 1 }.replay(&m, &w),
            Err(ReplayError::ChainSurvives(1))
        );
        let halter = parse("1RB---_1LA1RZ").unwrap();
        assert!(Certificate::BackwardRefutation { depth: 5 }
            .replay(&halter, &w)
            .is_err());
    }

    #[test]
    fn counter_does_not_translate() {
        // A binary counter grows without repeating; its window never matches.
        let m = parse("1RB1LA_0LA0RB").unwrap();
        for p in 1..40 {
            for d in [-2, -1, 1, 2] {
                let c = Certificate::TranslatedCycle {
                    start: 5,
                    period: p,
                    offset: d,
                };
                assert!(c.replay(&m, &InputWord::empty()).is_err(), "{c}");
            }
        }
    }
}
