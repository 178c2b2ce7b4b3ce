//! Closed n-gram position sets.
//!
//! A configuration is abstracted to its state, the head symbol, the `n`
//! cells on each side of the head, and two sets holding every `n`-gram that
//! may occur on the left and right half-tapes. The sets grow until nothing
//! new is reachable. If no abstract configuration can take a halting entry,
//! no concrete one can either.
//!
//! Cells take a third value, `END`, meaning this cell and every cell further
//! out is blank. It keeps "nothing beyond the last mark" visible in the
//! abstraction.

use std::collections::{BTreeSet, HashSet};

use super::{Certificate, Verdict};
use crate::machine::{Control, Dir, InputWord, Machine, StateId};

/// Largest context length tried.
pub(super) const MAX_GRAM: u8 = 6;
/// Abstract configurations explored before giving up on one length.
const MAX_CONFIGS: usize = 200_000;

/// Past the last visited cell on a side.
const END: u32 = 2;
const CELL_BITS: u32 = 2;

/// Cells nearest the head come first in both contexts, two bits each.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct Local {
    state: u16,
    left: u32,
    under: u8,
    right: u32,
}

fn bits(word: &[u8], n: u8) -> u32 {
    (0..n as usize).fold(0, |acc, i| {
        let cell = word.get(i).map_or(END, |&s| s as u32);
        acc | cell << (CELL_BITS * i as u32)
    })
}

fn mask(n: u8) -> u32 {
    (1 << (CELL_BITS * n as u32)) - 1
}

/// Symbol under the head after stepping onto the nearest cell of `ctx`.
fn nearest(ctx: u32) -> u8 {
    match ctx & 3 {
        END => 0,
        s => s as u8,
    }
}

/// Gram set and context of the right half-tape for input `w`.
fn initial(w: &InputWord, n: u8) -> (Local, HashSet<u32>, HashSet<u32>) {
    let s = w.symbols();
    let right: Vec<u8> = s.iter().skip(1).copied().collect();
    let mut grams = HashSet::new();
    for start in 0..=right.len() {
        grams.insert(bits(&right[start.min(right.len())..], n));
    }
    let local = Local {
        state: 0,
        left: bits(&[], n),
        under: s.first().copied().unwrap_or(0),
        right: bits(&right, n),
    };
    (local, HashSet::from([bits(&[], n)]), grams)
}

/// Shifts a context away from the head, pushing `s` in nearest.
fn push(ctx: u32, s: u8, n: u8) -> u32 {
    ((ctx << CELL_BITS) | s as u32) & mask(n)
}

/// Successors of `c` given the current gram sets, and any new grams.
/// `None` when `c` takes a halting entry.
fn successors(
    m: &Machine,
    c: Local,
    n: u8,
    left_grams: &HashSet<u32>,
    right_grams: &HashSet<u32>,
    out: &mut Vec<Local>,
    new_grams: &mut Vec<(Dir, u32)>,
) -> Option<()> {
    let t = m.get(StateId(c.state), c.under)?;
    let Control::State(next) = t.next else {
        return None;
    };
    let (from, toward, toward_grams, dir) = match t.dir {
        Dir::R => (c.left, c.right, right_grams, Dir::L),
        Dir::L => (c.right, c.left, left_grams, Dir::R),
    };
    // The written cell joins the context behind the head.
    let behind = push(from, t.write, n);
    new_grams.push((dir, behind));
    let under = nearest(toward);
    let rest = toward >> CELL_BITS;
    for x in 0..=END {
        let ahead = rest | x << (CELL_BITS * (n as u32 - 1));
        if !toward_grams.contains(&ahead) {
            continue;
        }
        let (left, right) = match t.dir {
            Dir::R => (behind, ahead),
            Dir::L => (ahead, behind),
        };
        out.push(Local {
            state: next.0,
            left,
            under,
            right,
        });
    }
    Some(())
}

/// True when the closure for gram length `n` avoids every halting entry.
pub(super) fn closes(m: &Machine, w: &InputWord, n: u8) -> bool {
    let (start, mut left_grams, mut right_grams) = initial(w, n);
    let mut seen = HashSet::from([start]);
    let mut todo = vec![start];
    let mut out = Vec::new();
    let mut new_grams = Vec::new();
    while let Some(c) = todo.pop() {
        out.clear();
        new_grams.clear();
        if successors(m, c, n, &left_grams, &right_grams, &mut out, &mut new_grams).is_none() {
            return false;
        }
        let mut grew = false;
        for &(side, g) in &new_grams {
            let set = match side {
                Dir::L => &mut left_grams,
                Dir::R => &mut right_grams,
            };
            grew |= set.insert(g);
        }
        for &s in &out {
            if seen.insert(s) {
                todo.push(s);
            }
        }
        if seen.len() > MAX_CONFIGS {
            return false;
        }
        if grew {
            // New grams can open moves from configurations already seen.
            todo.extend(seen.iter().copied());
        }
    }
    true
}

pub(super) fn decide(m: &Machine, w: &InputWord) -> Verdict {
    for n in 1..=MAX_GRAM {
        if closes(m, w, n) {
            return Verdict::NeverHalts {
                certificate: Certificate::ClosedPositionSet { n },
            };
        }
    }
    Verdict::Unknown { budget: 0 }
}

/// Naive saturation used by certificate replay: full passes over every
/// configuration until a pass adds nothing, then a closure check.
pub(super) fn check_closed(m: &Machine, w: &InputWord, n: u8) -> bool {
    if n == 0 || n > 15 {
        return false;
    }
    let (start, l, r) = initial(w, n);
    let mut configs: BTreeSet<Local> = BTreeSet::from([start]);
    let mut left: BTreeSet<u32> = l.into_iter().collect();
    let mut right: BTreeSet<u32> = r.into_iter().collect();
    loop {
        let before = (configs.len(), left.len(), right.len());
        let snapshot: Vec<Local> = configs.iter().copied().collect();
        for c in snapshot {
            let Some(t) = m.get(StateId(c.state), c.under) else {
                return false;
            };
            let Control::State(next) = t.next else {
                return false;
            };
            let mask = mask(n);
            let (behind, toward, grams) = match t.dir {
                Dir::R => (((c.left << 2) | t.write as u32) & mask, c.right, &right),
                Dir::L => (((c.right << 2) | t.write as u32) & mask, c.left, &left),
            };
            let mut found = Vec::new();
            for &g in grams.iter() {
                if g & (mask >> 2) == toward >> 2 {
                    let (l, r) = if t.dir == Dir::R {
                        (behind, g)
                    } else {
                        (g, behind)
                    };
                    found.push(Local {
                        state: next.0,
                        left: l,
                        under: if toward & 3 == END {
                            0
                        } else {
                            (toward & 3) as u8
                        },
                        right: r,
                    });
                }
            }
            configs.extend(found);
            match t.dir {
                Dir::R => left.insert(behind),
                Dir::L => right.insert(behind),
            };
            if configs.len() > MAX_CONFIGS {
                return false;
            }
        }
        if before == (configs.len(), left.len(), right.len()) {
            return true;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::format::parse;

    #[test]
    fn bouncer_closes() {
        let m = parse("1RB1LA_1LA1RB").unwrap();
        assert!(matches!(
            decide(&m, &InputWord::empty()),
            Verdict::NeverHalts { .. }
        ));
    }

    #[test]
    fn halting_machine_never_closes() {
        for text in ["1RB1LB_1LA1RZ", "1RB1RZ_1LB0RC_1LC1LA", "1RZ---"] {
            let m = parse(text).unwrap();
            for n in 1..=MAX_GRAM {
                assert!(!closes(&m, &InputWord::empty(), n), "{text} n={n}");
                assert!(!check_closed(&m, &InputWord::empty(), n), "{text} n={n}");
            }
        }
    }

    #[test]
    fn input_word_is_in_the_start_context() {
        // Halts on the first mark it reads; blank tape sweeps right forever.
        let m = parse("0RA1RZ").unwrap();
        assert!(closes(&m, &InputWord::empty(), 1));
        assert!(!closes(&m, &"001".parse().unwrap(), 2));
        assert!(!check_closed(&m, &"001".parse().unwrap(), 2));
    }
}
