//! Lowers a macro program to a two-symbol machine, four bits per macro
//! cell, most significant bit first. Between macro steps the head rests on
//! the first bit of a cell.

use std::collections::HashMap;

use super::program::sym::COUNT;
use super::program::MacroProgram;
use crate::machine::{Dir, Machine, Transition};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Key {
    /// `depth` bits of the cell read so far, as `prefix`.
    Read { state: usize, depth: u8, prefix: u8 },
    /// Writes the low bit of `bits` and moves left, `left` bits to go; at
    /// the first bit, moves `dir` instead.
    Write {
        bits: u8,
        left: u8,
        dir: Dir,
        next: Option<usize>,
    },
    /// Moves `dir` without writing, `left` moves to go.
    Move { dir: Dir, left: u8, next: usize },
}

#[derive(Default)]
struct Lowering {
    ids: HashMap<Key, u16>,
    keys: Vec<Key>,
}

impl Lowering {
    fn id(&mut self, key: Key) -> u16 {
        *self.ids.entry(key).or_insert_with(|| {
            self.keys.push(key);
            (self.keys.len() - 1) as u16
        })
    }

    fn read_root(&mut self, state: usize) -> u16 {
        self.id(Key::Read {
            state,
            depth: 0,
            prefix: 0,
        })
    }

    fn row(&mut self, p: &MacroProgram, key: Key) -> [Option<Transition>; 2] {
        let mut row = [None; 2];
        for read in 0..2u8 {
            row[read as usize] = match key {
                Key::Read {
                    state,
                    depth,
                    prefix,
                } if depth < 3 => {
                    let next = self.id(Key::Read {
                        state,
                        depth: depth + 1,
                        prefix: prefix * 2 + read,
                    });
                    Some(Transition::to(read, Dir::R, next))
                }
                Key::Read { state, prefix, .. } => {
                    let symbol = (prefix * 2 + read) as usize;
                    debug_assert!(symbol < COUNT);
                    p.rows[state][symbol].map(|t| {
                        let next = self.id(Key::Write {
                            bits: t.write >> 1,
                            left: 3,
                            dir: t.dir,
                            next: t.next,
                        });
                        Transition::to(t.write & 1, Dir::L, next)
                    })
                }
                Key::Write {
                    bits,
                    left,
                    dir,
                    next,
                } => {
                    let write = bits & 1;
                    Some(if left > 1 {
                        let n = self.id(Key::Write {
                            bits: bits >> 1,
                            left: left - 1,
                            dir,
                            next,
                        });
                        Transition::to(write, Dir::L, n)
                    } else {
                        match next {
                            None => Transition::halt(write, dir),
                            Some(next) => {
                                let n = self.id(Key::Move { dir, left: 3, next });
                                Transition::to(write, dir, n)
                            }
                        }
                    })
                }
                Key::Move { dir, left, next } => {
                    let n = if left > 1 {
                        self.id(Key::Move {
                            dir,
                            left: left - 1,
                            next,
                        })
                    } else {
                        self.read_root(next)
                    };
                    Some(Transition::to(read, dir, n))
                }
            };
        }
        row
    }
}

pub fn compile(p: &MacroProgram) -> Machine {
    let mut l = Lowering::default();
    let start = l.read_root(0);
    debug_assert_eq!(start, 0);
    let mut rows = Vec::new();
    while rows.len() < l.keys.len() {
        let key = l.keys[rows.len()];
        rows.push(l.row(p, key));
    }
    Machine::from_rows(rows)
}
