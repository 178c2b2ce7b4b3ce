//! Finite automata reduction.
//!
//! Configuration words are `u f v`: left cells, the state letter, then the
//! cells from the head rightward. An NFA over these words is a proof of
//! non-halting when its language
//!
//! * is unchanged by blank padding at either end,
//! * contains every word whose head takes a halting entry,
//! * contains a word whenever it contains the word's successor, and
//! * does not contain the start word.
//!
//! The left half is read by a small DFA tried in canonical order; the rest
//! of the NFA is the least solution of the closure conditions. The same
//! search also runs on the mirrored machine.

use super::{Certificate, Verdict};
use crate::machine::{Control, Dir, InputWord, Machine, StateId, Symbol};

/// Largest DFA tried.
pub(super) const MAX_DFA_STATES: usize = 4;
const MAX_NFA_STATES: usize = 64;

type Set = u64;

#[derive(Clone, Debug, PartialEq, Eq)]
pub(super) struct Nfa {
    pub size: usize,
    pub start: Set,
    pub accept: Set,
    /// Rows for cell symbols 0 and 1.
    pub cells: [Vec<Set>; 2],
    /// Rows for each state letter.
    pub states: Vec<Vec<Set>>,
}

fn apply(set: Set, rows: &[Set]) -> Set {
    let mut out = 0;
    let mut rest = set;
    while rest != 0 {
        let i = rest.trailing_zeros() as usize;
        out |= rows[i];
        rest &= rest - 1;
    }
    out
}

fn mirror(m: &Machine) -> Machine {
    let rows = m
        .rows()
        .iter()
        .map(|row| {
            row.map(|t| {
                t.map(|mut t| {
                    t.dir = t.dir.flip();
                    t
                })
            })
        })
        .collect();
    Machine::from_rows(rows)
}

/// The start configuration as `(u, v)` around the state letter.
fn start_word(w: &InputWord, mirrored: bool) -> (Vec<Symbol>, Vec<Symbol>) {
    let s = w.symbols();
    if s.is_empty() {
        return (Vec::new(), vec![0]);
    }
    if mirrored {
        (s[1..].iter().rev().copied().collect(), vec![s[0]])
    } else {
        (Vec::new(), s.to_vec())
    }
}

/// Least NFA satisfying the closure conditions around `dfa`, if it rejects
/// the start word.
pub(super) fn solve(m: &Machine, w: &InputWord, dfa: &[[u8; 2]], mirrored: bool) -> Option<Nfa> {
    let m = if mirrored { mirror(m) } else { m.clone() };
    let k = dfa.len();
    let nq = m.n_states();
    let size = k + k * nq + 1;
    if size > MAX_NFA_STATES {
        return None;
    }
    let e = |d: usize, f: usize| k + d * nq + f;
    let sink = size - 1;
    let mut cells = [vec![0; size], vec![0; size]];
    for (d, row) in dfa.iter().enumerate() {
        for s in 0..2 {
            cells[s][d] = 1 << row[s];
        }
    }
    cells[0][sink] = 1 << sink;
    cells[1][sink] = 1 << sink;
    let mut states = vec![vec![0; size]; nq];
    for (f, rows) in states.iter_mut().enumerate() {
        for (d, row) in rows.iter_mut().enumerate().take(k) {
            *row = 1 << e(d, f);
        }
    }
    let mut accept: Set = 1 << sink;

    loop {
        let before = (cells.clone(), accept);
        for f in 0..nq {
            for r in 0..2 {
                let t = m.rows()[f][r];
                match t {
                    Some(t) if t.next != Control::Halt => {
                        let Control::State(next) = t.next else {
                            unreachable!()
                        };
                        let (wr, to) = (t.write as usize, next.index());
                        for d in 0..k {
                            match t.dir {
                                Dir::R => {
                                    cells[r][e(d, f)] |= 1 << e(dfa[d][wr] as usize, to);
                                }
                                Dir::L => {
                                    for b in 0..2 {
                                        let mid = cells[b][e(d, to)];
                                        let add = apply(mid, &cells[wr]);
                                        cells[r][e(dfa[d][b] as usize, f)] |= add;
                                    }
                                }
                            }
                        }
                    }
                    _ => {
                        for d in 0..k {
                            cells[r][e(d, f)] |= 1 << sink;
                        }
                    }
                }
            }
        }
        for (x, &c) in cells[0].iter().enumerate().take(size) {
            if c & accept != 0 {
                accept |= 1 << x;
            }
        }
        if (cells.clone(), accept) == before {
            break;
        }
    }

    let nfa = Nfa {
        size,
        start: 1,
        accept,
        cells,
        states,
    };
    let (u, v) = start_word(w, mirrored);
    let mut at = nfa.start;
    for &s in &u {
        at = apply(at, &nfa.cells[s as usize]);
    }
    at = apply(at, &nfa.states[0]);
    for &s in &v {
        at = apply(at, &nfa.cells[s as usize]);
    }
    (at & nfa.accept == 0).then_some(nfa)
}

/// Checks the closure conditions on `nfa` directly. Shares nothing with
/// [`solve`] beyond the word convention.
pub(super) fn verify(m: &Machine, w: &InputWord, nfa: &Nfa, mirrored: bool) -> bool {
    let m = if mirrored { mirror(m) } else { m.clone() };
    let n = nfa.size;
    if n == 0 || n > MAX_NFA_STATES || nfa.states.len() != m.n_states() {
        return false;
    }
    let rows_ok = nfa
        .cells
        .iter()
        .chain(nfa.states.iter())
        .all(|r| r.len() == n);
    if !rows_ok {
        return false;
    }
    let all: Set = if n == 64 { !0 } else { (1 << n) - 1 };
    let one = |x: usize| -> Set { 1 << x };
    let chain = |set: Set, mats: &[&Vec<Set>]| mats.iter().fold(set, |s, m| apply(s, m));
    let (t0, t1) = (&nfa.cells[0], &nfa.cells[1]);
    let cell = |s: u8| &nfa.cells[s as usize];

    // Padding on the left and on the right.
    if apply(nfa.start, t0) != nfa.start {
        return false;
    }
    for (x, &t) in t0.iter().enumerate().take(n) {
        if (t & nfa.accept != 0) != (nfa.accept & one(x) != 0) {
            return false;
        }
    }

    // Left parts never lose every run of the automaton.
    let mut reach = nfa.start;
    loop {
        let next = reach | apply(reach, t0) | apply(reach, t1);
        if next == reach {
            break;
        }
        reach = next;
    }
    let mut sinks = 0;
    for x in 0..n {
        if nfa.accept & one(x) != 0 && t0[x] & one(x) != 0 && t1[x] & one(x) != 0 {
            sinks |= one(x);
        }
        if reach & one(x) != 0 && (t0[x] == 0 || t1[x] == 0) {
            return false;
        }
    }

    for f in 0..m.n_states() {
        let tf = &nfa.states[f];
        for r in 0..2u8 {
            let tr = cell(r);
            let t = m.get(StateId(f as u16), r);
            let next = t.and_then(|t| t.next.state());
            let Some((t, next)) = t.zip(next) else {
                // Every word with this head is accepted through a sink.
                for x in 0..n {
                    if reach & one(x) != 0 && chain(one(x), &[tf, tr]) & sinks == 0 {
                        return false;
                    }
                }
                continue;
            };
            let tt = &nfa.states[next.index()];
            let tw = cell(t.write);
            for x in 0..n {
                let ok = match t.dir {
                    Dir::R => {
                        let after = chain(one(x), &[tw, tt]);
                        after & !chain(one(x), &[tf, tr]) == 0
                    }
                    Dir::L => (0..2u8).all(|b| {
                        let tb = cell(b);
                        let after = chain(one(x), &[tt, tb, tw]);
                        after & !chain(one(x), &[tb, tf, tr]) == 0
                    }),
                };
                if !ok {
                    return false;
                }
            }
        }
    }

    let (u, v) = start_word(w, mirrored);
    let mut at = nfa.start & all;
    for &s in &u {
        at = apply(at, cell(s));
    }
    at = apply(at, &nfa.states[0]);
    for &s in &v {
        at = apply(at, cell(s));
    }
    at & nfa.accept == 0
}

/// DFAs with `k` states, `0` looping on blank, states numbered in order of
/// first appearance.
fn dfas(k: usize) -> Vec<Vec<[u8; 2]>> {
    fn go(
        k: usize,
        table: &mut Vec<[u8; 2]>,
        slot: usize,
        seen: usize,
        out: &mut Vec<Vec<[u8; 2]>>,
    ) {
        if slot == 2 * k {
            if seen == k {
                out.push(table.clone());
            }
            return;
        }
        let (d, s) = (slot / 2, slot % 2);
        if d >= seen {
            return;
        }
        if slot == 0 {
            table[0][0] = 0;
            go(k, table, 1, seen, out);
            return;
        }
        for to in 0..=seen.min(k - 1) {
            table[d][s] = to as u8;
            go(k, table, slot + 1, seen.max(to + 1), out);
        }
    }
    let mut out = Vec::new();
    go(k, &mut vec![[0; 2]; k], 0, 1, &mut out);
    out
}

pub(super) fn decide(m: &Machine, w: &InputWord) -> Verdict {
    for k in 1..=MAX_DFA_STATES {
        for dfa in dfas(k) {
            for mirrored in [false, true] {
                if let Some(nfa) = solve(m, w, &dfa, mirrored) {
                    if verify(m, w, &nfa, mirrored) {
                        return Verdict::NeverHalts {
                            certificate: Certificate::FiniteAutomaton { dfa, mirrored },
                        };
                    }
                }
            }
        }
    }
    Verdict::Unknown { budget: 0 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::format::parse;

    #[test]
    fn dfa_counts() {
        assert_eq!(dfas(1), vec![vec![[0, 0]]]);
        assert_eq!(dfas(2).len(), 4);
        assert!(dfas(3).iter().all(|d| d[0][0] == 0));
    }

    #[test]
    fn counter_is_refuted() {
        let m = parse("1RB---_1LC1RA_0RA0LC").unwrap();
        let v = decide(&m, &InputWord::empty());
        let cert = v.certificate().expect("refuted");
        cert.replay(&m, &InputWord::empty()).unwrap();
    }

    #[test]
    fn halting_machines_are_never_refuted() {
        for text in [
            "1RB1LB_1LA1RZ",
            "1RB1RZ_1LB0RC_1LC1LA",
            "1RZ---",
            "1RB---_------",
        ] {
            let m = parse(text).unwrap();
            for k in 1..=3 {
                for dfa in dfas(k) {
                    for mirrored in [false, true] {
                        if let Some(nfa) = solve(&m, &InputWord::empty(), &dfa, mirrored) {
                            assert!(!verify(&m, &InputWord::empty(), &nfa, mirrored), "{text}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn tampered_automaton_fails_verification() {
        let m = parse("1RB---_1LC1RA_0RA0LC").unwrap();
        let w = InputWord::empty();
        let Verdict::NeverHalts {
            certificate: Certificate::FiniteAutomaton { dfa, mirrored },
        } = decide(&m, &w)
        else {
            panic!("expected an automaton certificate")
        };
        let mut nfa = solve(&m, &w, &dfa, mirrored).unwrap();
        assert!(verify(&m, &w, &nfa, mirrored));
        nfa.accept |= nfa.start;
        assert!(!verify(&m, &w, &nfa, mirrored));
    }
}
