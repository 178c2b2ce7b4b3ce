//! Translated cycles: a configuration recurs shifted along the tape.
//!
//! Candidates are head records, steps where the head reaches a new extreme.
//! Two records of the same state on the same side match when the tape seen
//! from the head, over every cell the head can reach in between, is equal.

use std::collections::VecDeque;

use super::{Certificate, Verdict};
use crate::machine::{Configuration, Control, InputWord, Machine, StepKind};
use crate::tape::Tape;

/// Records kept per side; older ones are dropped.
const RECORD_WINDOW: usize = 256;

#[derive(Clone, Copy, PartialEq, Eq)]
enum Side {
    Right,
    Left,
}

struct Record {
    step: u64,
    state: Control,
    head: i64,
    /// Furthest excursion against the side, from this record to the next.
    back: i64,
    lo: i64,
    cells: Vec<u8>,
}

impl Record {
    fn take(step: u64, conf: &Configuration) -> Self {
        let (lo, hi) = conf.tape.extent();
        Record {
            step,
            state: conf.state,
            head: conf.head,
            back: conf.head,
            lo,
            cells: conf.tape.range(lo, (hi - lo + 1) as usize),
        }
    }

    fn hi(&self) -> i64 {
        self.lo + self.cells.len() as i64 - 1
    }

    fn cell(&self, i: i64) -> u8 {
        let k = i - self.lo;
        if k >= 0 && (k as usize) < self.cells.len() {
            self.cells[k as usize]
        } else {
            0
        }
    }
}

struct Track {
    side: Side,
    records: VecDeque<Record>,
}

impl Track {
    fn new(side: Side) -> Self {
        Track {
            side,
            records: VecDeque::new(),
        }
    }

    fn note_head(&mut self, head: i64) {
        if let Some(last) = self.records.back_mut() {
            last.back = match self.side {
                Side::Right => last.back.min(head),
                Side::Left => last.back.max(head),
            };
        }
    }

    /// Compares `new` with earlier records, then stores it.
    fn push(&mut self, new: Record) -> Option<Certificate> {
        let mut reach = new.head;
        let mut found = None;
        for old in self.records.iter().rev() {
            reach = match self.side {
                Side::Right => reach.min(old.back),
                Side::Left => reach.max(old.back),
            };
            if old.state == new.state && old.head != new.head && self.matches(old, &new, reach) {
                found = Some(Certificate::TranslatedCycle {
                    start: old.step,
                    period: new.step - old.step,
                    offset: new.head - old.head,
                });
            }
        }
        if found.is_none() {
            if self.records.len() == RECORD_WINDOW {
                self.records.pop_front();
            }
            self.records.push_back(new);
        }
        found
    }

    fn matches(&self, old: &Record, new: &Record, reach: i64) -> bool {
        let (from, to) = match self.side {
            Side::Right => {
                let w = old.head - reach;
                (-w, (old.hi() - old.head).max(new.hi() - new.head))
            }
            Side::Left => {
                let w = reach - old.head;
                ((old.lo - old.head).min(new.lo - new.head), w)
            }
        };
        (from..=to).all(|i| old.cell(old.head + i) == new.cell(new.head + i))
    }
}

pub(super) fn decide(m: &Machine, w: &InputWord, budget: u64) -> Verdict {
    let mut conf = Configuration::initial(w);
    let mut right = Track::new(Side::Right);
    let mut left = Track::new(Side::Left);
    right.push(Record::take(0, &conf));
    left.push(Record::take(0, &conf));
    let (mut min_head, mut max_head) = (0i64, 0i64);
    let mut steps = 0u64;
    while steps < budget {
        let kind = conf.advance(m).expect("running configuration");
        steps += 1;
        if kind != StepKind::Moved {
            return Verdict::Halts {
                steps,
                marks: conf.tape.marks(),
            };
        }
        right.note_head(conf.head);
        left.note_head(conf.head);
        let found = if conf.head > max_head {
            max_head = conf.head;
            right.push(Record::take(steps, &conf))
        } else if conf.head < min_head {
            min_head = conf.head;
            left.push(Record::take(steps, &conf))
        } else {
            None
        };
        if let Some(certificate) = found {
            return Verdict::NeverHalts { certificate };
        }
    }
    Verdict::Unknown { budget }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::format::parse;

    #[test]
    fn left_forever() {
        let m = parse("1LA1LA").unwrap();
        assert_eq!(
            decide(&m, &InputWord::empty(), 100),
            Verdict::NeverHalts {
                certificate: Certificate::TranslatedCycle {
                    start: 0,
                    period: 1,
                    offset: -1
                }
            }
        );
    }

    #[test]
    fn zigzag_drift_is_found_and_replays() {
        // Two steps right, one step back, repeated.
        let m = parse("1RB1RB_1RC1RC_1LA1RA").unwrap();
        let v = decide(&m, &InputWord::empty(), 10_000);
        let cert = v.certificate().expect("translated cycler");
        assert!(matches!(cert, Certificate::TranslatedCycle { offset, .. } if *offset > 0));
        cert.replay(&m, &InputWord::empty()).unwrap();
    }

    #[test]
    fn exact_cycler_is_not_translated() {
        let m = parse("0RB---_0LA---").unwrap();
        assert_eq!(
            decide(&m, &InputWord::empty(), 1000),
            Verdict::Unknown { budget: 1000 }
        );
    }

    #[test]
    fn input_word_must_be_consumed_before_matching() {
        // Walks right over the input; keeps going right over blanks forever.
        let m = parse("1RA0RA").unwrap();
        let w: InputWord = "111".parse().unwrap();
        let v = decide(&m, &w, 1000);
        let cert = v.certificate().expect("translated cycler");
        cert.replay(&m, &w).unwrap();
    }
}
