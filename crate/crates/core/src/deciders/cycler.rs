//! Exact cycles: some configuration recurs.

use super::{Certificate, Verdict};
use crate::machine::{Configuration, InputWord, Machine, StepKind};
use crate::tape::Tape;

enum Advance {
    Running,
    Halted { steps: u64, marks: u64 },
}

struct Walker<'a> {
    m: &'a Machine,
    conf: Configuration,
    steps: u64,
}

impl<'a> Walker<'a> {
    fn new(m: &'a Machine, w: &InputWord) -> Self {
        Walker {
            m,
            conf: Configuration::initial(w),
            steps: 0,
        }
    }

    fn advance(&mut self) -> Advance {
        let kind = self
            .conf
            .advance(self.m)
            .expect("walker never advances a halted configuration");
        self.steps += 1;
        match kind {
            StepKind::Moved => Advance::Running,
            StepKind::HaltedByZ | StepKind::HaltedByUndefined => Advance::Halted {
                steps: self.steps,
                marks: self.conf.tape.marks(),
            },
        }
    }
}

fn same(a: &Configuration, b: &Configuration) -> bool {
    a.state == b.state
        && a.head == b.head
        && a.tape.marks() == b.tape.marks()
        && a.tape.same_cells(&b.tape)
}

pub(super) fn decide(m: &Machine, w: &InputWord, budget: u64) -> Verdict {
    // Brent: find the period, then the first step of the cycle.
    let mut hare = Walker::new(m, w);
    let mut tortoise = hare.conf.clone();
    let mut power = 1u64;
    let mut period = 0u64;
    loop {
        if hare.steps >= budget {
            return Verdict::Unknown { budget };
        }
        if let Advance::Halted { steps, marks } = hare.advance() {
            return Verdict::Halts { steps, marks };
        }
        period += 1;
        if same(&hare.conf, &tortoise) {
            break;
        }
        if period == power {
            tortoise = hare.conf.clone();
            power *= 2;
            period = 0;
        }
    }

    let mut lead = Walker::new(m, w);
    for _ in 0..period {
        lead.advance();
    }
    let mut trail = Walker::new(m, w);
    while !same(&lead.conf, &trail.conf) {
        lead.advance();
        trail.advance();
    }
    Verdict::NeverHalts {
        certificate: Certificate::ExactCycle {
            start: trail.steps,
            period,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::format::parse;

    #[test]
    fn delayed_cycle_start() {
        // Walks right once, then bounces between cells 1 and 2.
        let m = parse("0RB---_0RC---_0LB---").unwrap();
        assert_eq!(
            decide(&m, &InputWord::empty(), 1000),
            Verdict::NeverHalts {
                certificate: Certificate::ExactCycle {
                    start: 1,
                    period: 2
                }
            }
        );
    }

    #[test]
    fn undefined_halt_counts_a_step() {
        let m = parse("1RB---_------").unwrap();
        assert_eq!(
            decide(&m, &InputWord::empty(), 10),
            Verdict::Halts { steps: 2, marks: 1 }
        );
    }

    #[test]
    fn cycle_on_input_word() {
        // Erases the input and then bounces.
        let m = parse("0RB0RA_0LA0LA").unwrap();
        let w: InputWord = "11".parse().unwrap();
        let v = decide(&m, &w, 1000);
        let cert = v.certificate().expect("cycler");
        cert.replay(&m, &w).unwrap();
    }
}
