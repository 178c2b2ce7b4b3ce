//! Backward reasoning from halting entries.
//!
//! Start from every configuration fragment that halts on its next step and
//! search for predecessors, tracking only the cells the fragment constrains.
//! If every branch dies before `depth` steps, a halting run would have to
//! be shorter than `depth`, which simulation rules out.

use std::collections::BTreeMap;

use super::{Certificate, Verdict};
use crate::machine::{Configuration, Control, InputWord, Machine, StateId, StepKind};
use crate::tape::Tape;

/// Deepest backward layer explored.
pub(super) const MAX_DEPTH: u32 = 64;
/// Fragments alive in one layer before giving up.
const MAX_LAYER: usize = 20_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub(super) struct Fragment {
    pub state: StateId,
    pub head: i64,
    pub cells: BTreeMap<i64, u8>,
}

/// Fragments halting on their next step.
pub(super) fn halting_fragments(m: &Machine) -> Vec<Fragment> {
    let mut out = Vec::new();
    for (q, row) in m.rows().iter().enumerate() {
        for (s, t) in row.iter().enumerate() {
            if t.is_none_or(|t| t.next == Control::Halt) {
                out.push(Fragment {
                    state: StateId(q as u16),
                    head: 0,
                    cells: BTreeMap::from([(0, s as u8)]),
                });
            }
        }
    }
    out
}

/// Every fragment that steps into `f`.
pub(super) fn predecessors(m: &Machine, f: &Fragment) -> Vec<Fragment> {
    let mut out = Vec::new();
    for (q, row) in m.rows().iter().enumerate() {
        for (s, t) in row.iter().enumerate() {
            let Some(t) = t else { continue };
            if t.next != Control::State(f.state) {
                continue;
            }
            let prev = f.head - t.dir.delta();
            if f.cells.get(&prev).is_some_and(|&c| c != t.write) {
                continue;
            }
            let mut cells = f.cells.clone();
            cells.insert(prev, s as u8);
            out.push(Fragment {
                state: StateId(q as u16),
                head: prev,
                cells,
            });
        }
    }
    out
}

fn runs_at_least(m: &Machine, w: &InputWord, steps: u64) -> Option<(u64, u64)> {
    let mut c = Configuration::initial(w);
    for k in 1..=steps {
        if c.advance(m).expect("running") != StepKind::Moved {
            return Some((k, c.tape.marks()));
        }
    }
    None
}

pub(super) fn decide(m: &Machine, w: &InputWord) -> Verdict {
    let mut layer = halting_fragments(m);
    let mut depth = 0u32;
    while !layer.is_empty() {
        if depth == MAX_DEPTH || layer.len() > MAX_LAYER {
            return Verdict::Unknown { budget: 0 };
        }
        layer = layer.iter().flat_map(|f| predecessors(m, f)).collect();
        depth += 1;
    }
    match runs_at_least(m, w, depth as u64) {
        Some((steps, marks)) => Verdict::Halts { steps, marks },
        None => Verdict::NeverHalts {
            certificate: Certificate::BackwardRefutation { depth },
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::format::parse;

    #[test]
    fn unreachable_state_dies_at_once() {
        let m = parse("1RB0LB_1LA0RA_------").unwrap();
        assert_eq!(
            decide(&m, &InputWord::empty()),
            Verdict::NeverHalts {
                certificate: Certificate::BackwardRefutation { depth: 1 }
            }
        );
    }

    #[test]
    fn contradiction_two_steps_back() {
        // C0 is entered only by 0LC from B, and B only after 1RB wrote a mark there.
        let m = parse("1RB1LA_0LA0LC_---1RA").unwrap();
        let v = decide(&m, &InputWord::empty());
        v.certificate()
            .expect("refuted")
            .replay(&m, &InputWord::empty())
            .unwrap();
    }

    #[test]
    fn halting_machine_is_not_refuted() {
        let m = parse("1RB1LB_1LA1RZ").unwrap();
        assert!(!matches!(
            decide(&m, &InputWord::empty()),
            Verdict::NeverHalts { .. }
        ));
    }
}
