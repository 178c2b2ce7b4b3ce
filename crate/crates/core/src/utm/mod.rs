//! A universal machine: one fixed two-symbol machine `U` such that running
//! `U` on `encode(M, w)` halts exactly when `M` halts on `w`, and the final
//! tape of `U` yields the step count, marks, head and final state of `M`.
//!
//! Tape layout, one macro cell per four bits:
//!
//! ```text
//! [LB] [counter x32] [S|Sc] E w d target E w d target ... [RB] sim cells 0..
//! ```
//!
//! Simulated cells left of 0 sit left of `LB`; the `LB` symbol records which
//! side the simulated head is on. A target is `U` repeated `k` for state `k`,
//! `Hz` for the halt state, or `Ud` for an undefined entry.

mod compile;
mod program;

use std::sync::OnceLock;

use num_bigint::BigUint;

use crate::machine::{Control, Dir, InputWord, Machine, StateId, Symbol, Transition};
use crate::simulator::{run_direct_with_tape, OutcomeKind, RunLimits, RunOutcome};
use crate::tape::{DenseTape, Tape};

use program::sym::*;
pub use program::{MacroProgram, MacroRun, MacroTransition};

/// Width of the step counter in macro cells. It wraps at `2^32`.
pub const COUNTER_CELLS: usize = 32;
const BITS: usize = 4;
const FIRST_BLOCK: usize = 1 + COUNTER_CELLS;

struct Universal {
    program: MacroProgram,
    machine: Machine,
}

fn universal() -> &'static Universal {
    static U: OnceLock<Universal> = OnceLock::new();
    U.get_or_init(|| {
        let program = program::build();
        let machine = compile::compile(&program);
        Universal { program, machine }
    })
}

/// The universal machine. It has too many states for the text format.
pub fn universal_machine() -> &'static Machine {
    &universal().machine
}

/// The same program over its 16-symbol alphabet.
pub fn macro_program() -> &'static MacroProgram {
    &universal().program
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum UtmError {
    #[error("machine has no states")]
    NoStates,
    #[error("word length {0} is not a whole number of 4-bit cells")]
    Length(usize),
    #[error("malformed encoding at cell {cell}: {reason}")]
    Malformed { cell: usize, reason: &'static str },
}

/// `M` and `w` as an input word for the universal machine. The harm gadget
/// marker of `M`, if any, travels alongside the word.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UtmEncoding {
    pub word: InputWord,
    pub gadget: Option<StateId>,
}

fn bit(b: Symbol) -> u8 {
    if b == 1 {
        ONE
    } else {
        Z0
    }
}

fn macro_cells(m: &Machine, w: &InputWord) -> Vec<u8> {
    let mut cells = vec![LB_R];
    cells.extend(std::iter::repeat_n(Z0, COUNTER_CELLS));
    for (q, row) in m.rows().iter().enumerate() {
        cells.push(if q == 0 { SC } else { S });
        for t in row {
            cells.push(E);
            match t {
                None => cells.extend([Z0, Z0, UD]),
                Some(t) => {
                    cells.push(bit(t.write));
                    cells.push(bit((t.dir == Dir::R) as u8));
                    match t.next {
                        Control::Halt => cells.push(HZ),
                        Control::State(s) => cells.extend(std::iter::repeat_n(U, s.index())),
                    }
                }
            }
        }
    }
    cells.push(RB);
    let symbols = w.symbols();
    cells.push(if symbols.first() == Some(&1) { H1 } else { H0 });
    cells.extend(symbols.iter().skip(1).map(|&s| bit(s)));
    cells
}

pub fn encode(m: &Machine, w: &InputWord) -> Result<UtmEncoding, UtmError> {
    if m.n_states() == 0 {
        return Err(UtmError::NoStates);
    }
    let mut bits: Vec<Symbol> = macro_cells(m, w)
        .into_iter()
        .flat_map(|c| (0..BITS).rev().map(move |i| (c >> i) & 1))
        .collect();
    if w.is_empty() {
        // `H0` trimmed to three bits keeps "" apart from "0".
        bits.pop();
    }
    Ok(UtmEncoding {
        word: InputWord::new(bits),
        gadget: m.gadget(),
    })
}

impl UtmEncoding {
    pub fn decode(&self) -> Result<(Machine, InputWord), UtmError> {
        let mut bits = self.word.symbols().to_vec();
        let empty = bits.len() % BITS == BITS - 1;
        if empty {
            bits.push(0);
        } else if !bits.len().is_multiple_of(BITS) {
            return Err(UtmError::Length(bits.len()));
        }
        let cells: Vec<u8> = bits
            .chunks(BITS)
            .map(|c| c.iter().fold(0, |acc, &b| acc * 2 + b))
            .collect();
        let bad = |cell: usize, reason| UtmError::Malformed { cell, reason };
        let at = |i: usize| cells.get(i).copied();

        if at(0) != Some(LB_R) {
            return Err(bad(0, "expected left boundary"));
        }
        if let Some(i) = (1..FIRST_BLOCK).find(|&i| at(i) != Some(Z0)) {
            return Err(bad(i, "counter not zero"));
        }
        let mut i = FIRST_BLOCK;
        let mut rows: Vec<[Option<Transition>; 2]> = Vec::new();
        // Targets are checked once the state count is known.
        let mut targets = Vec::new();
        while at(i) != Some(RB) {
            let marker = if rows.is_empty() { SC } else { S };
            if at(i) != Some(marker) {
                return Err(bad(i, "expected block marker"));
            }
            i += 1;
            let mut row = [None; 2];
            for slot in &mut row {
                if at(i) != Some(E) {
                    return Err(bad(i, "expected entry marker"));
                }
                let (w, d) = match (at(i + 1), at(i + 2)) {
                    (Some(w @ (Z0 | ONE)), Some(d @ (Z0 | ONE))) => (w, d),
                    _ => return Err(bad(i + 1, "expected write and direction bits")),
                };
                i += 3;
                let write = (w == ONE) as Symbol;
                let dir = if d == ONE { Dir::R } else { Dir::L };
                match at(i) {
                    Some(UD) => {
                        if w != Z0 || d != Z0 {
                            return Err(bad(i, "undefined entry with nonzero bits"));
                        }
                        i += 1;
                    }
                    Some(HZ) => {
                        *slot = Some(Transition::halt(write, dir));
                        i += 1;
                    }
                    _ => {
                        let start = i;
                        while at(i) == Some(U) {
                            i += 1;
                        }
                        targets.push((start, i - start));
                        *slot = Some(Transition::to(write, dir, (i - start) as u16));
                    }
                }
            }
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(bad(i, "no states"));
        }
        if let Some(&(cell, _)) = targets.iter().find(|&&(_, k)| k >= rows.len()) {
            return Err(bad(cell, "target beyond the last state"));
        }
        i += 1;
        let sim = &cells[i.min(cells.len())..];
        let word = match sim {
            [] => return Err(bad(i, "missing head cell")),
            [H0] if empty => InputWord::empty(),
            _ if empty => return Err(bad(i, "trimmed encoding of a nonempty word")),
            [h @ (H0 | H1), rest @ ..] => {
                let mut word = vec![(*h == H1) as Symbol];
                for (k, &c) in rest.iter().enumerate() {
                    match c {
                        Z0 | ONE => word.push((c == ONE) as Symbol),
                        _ => return Err(bad(i + 1 + k, "expected a tape symbol")),
                    }
                }
                InputWord::new(word)
            }
            _ => return Err(bad(i, "expected head cell")),
        };
        let mut m = Machine::from_rows(rows);
        if let Some(g) = self.gadget {
            if g.index() + 1 >= m.n_states() {
                return Err(bad(FIRST_BLOCK, "gadget state out of range"));
            }
            m = m.with_gadget(g);
        }
        Ok((m, word))
    }
}

/// A run of the universal machine and what it says about the simulated one.
#[derive(Clone, Debug)]
pub struct UtmRun {
    pub utm: RunOutcome,
    /// Present when the universal machine halted.
    pub simulated: Option<RunOutcome>,
}

pub fn run_via_utm(enc: &UtmEncoding, lim: &RunLimits) -> UtmRun {
    let lim = lim.clone().with_snapshot_cells(0);
    let (utm, tape) = run_direct_with_tape(universal_machine(), &enc.word, &lim);
    let simulated = utm.halted().then(|| recover(&tape, enc.gadget));
    UtmRun { utm, simulated }
}

fn cell_at(tape: &DenseTape, i: i64) -> u8 {
    tape.range(i * BITS as i64, BITS)
        .iter()
        .fold(0, |acc, &b| acc * 2 + b)
}

/// Reads the simulated outcome off a halted universal tape.
fn recover(tape: &DenseTape, gadget: Option<StateId>) -> RunOutcome {
    let (lo, hi) = tape.extent();
    let (lo, hi) = (lo.div_euclid(BITS as i64), hi.div_euclid(BITS as i64));

    let steps = (1..FIRST_BLOCK as i64).fold(BigUint::from(0u8), |acc, i| {
        acc * 2u8 + (cell_at(tape, i) == ONE) as u8
    });
    let mut i = FIRST_BLOCK as i64;
    let mut block = None;
    let mut current = None;
    let mut pointer = None;
    loop {
        match cell_at(tape, i) {
            RB => break,
            c @ (S | SC | SP) => {
                let b = block.map_or(0, |b| b + 1);
                block = Some(b);
                if c == SC {
                    current = Some(b);
                } else if c == SP {
                    pointer = Some(b);
                }
            }
            _ => {}
        }
        i += 1;
    }
    let rb = i;
    let sim_index = |k: i64| if k < 0 { k } else { k - rb - 1 };
    let mut marks = 0;
    let mut head = 0;
    for k in (lo..0).chain(rb + 1..=hi) {
        match cell_at(tape, k) {
            ONE => marks += 1,
            H1 => {
                marks += 1;
                head = sim_index(k);
            }
            H0 => head = sim_index(k),
            _ => {}
        }
    }
    let (final_state, halted_via_gadget) = match (pointer, current) {
        (Some(p), _) => (
            Control::Halt,
            gadget.is_some_and(|g| g.index() + 1 == p as usize),
        ),
        (None, Some(c)) => (Control::State(StateId(c as u16)), false),
        (None, None) => unreachable!("halted universal tape without a state marker"),
    };
    RunOutcome {
        kind: OutcomeKind::Halted,
        steps,
        marks,
        final_state,
        head,
        halted_via_gadget,
        tape: None,
    }
}

/// Runs the macro program on the macro cells of `encode(m, w)`; for tests
/// and for tracing the universal machine at a readable level.
pub fn run_macro(m: &Machine, w: &InputWord, max_steps: u64) -> MacroRun {
    macro_program().run(&macro_cells(m, w), max_steps)
}

#[cfg(test)]
mod tests;
