//! The two-symbol machine model and its single-step semantics.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::tape::{DenseTape, Tape};

/// Tape symbol. Only `0` (blank) and `1` (mark) occur.
pub type Symbol = u8;

pub const BLANK: Symbol = 0;
pub const MARK: Symbol = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Dir {
    L,
    R,
}

impl Dir {
    #[inline]
    pub fn delta(self) -> i64 {
        match self {
            Dir::L => -1,
            Dir::R => 1,
        }
    }

    pub fn flip(self) -> Dir {
        match self {
            Dir::L => Dir::R,
            Dir::R => Dir::L,
        }
    }
}

impl fmt::Display for Dir {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Dir::L => "L",
            Dir::R => "R",
        })
    }
}

/// Index of a control state; `StateId(0)` is the start state `A`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StateId(pub u16);

impl StateId {
    pub const START: StateId = StateId(0);

    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for StateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 < 25 {
            write!(f, "{}", (b'A' + self.0 as u8) as char)
        } else {
            write!(f, "q{}", self.0)
        }
    }
}

/// Control state of a configuration: a machine state or the halt state `Z`.
/// Serialized as its display form: `A`..`Y`, `q25` and above, or `Z`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Control {
    State(StateId),
    Halt,
}

impl Control {
    pub fn state(self) -> Option<StateId> {
        match self {
            Control::State(s) => Some(s),
            Control::Halt => None,
        }
    }
}

impl From<Control> for String {
    fn from(c: Control) -> String {
        c.to_string()
    }
}

impl TryFrom<String> for Control {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        let bad = || format!("invalid control state {s:?}");
        match s.as_bytes() {
            [b'Z'] => Ok(Control::Halt),
            [c @ b'A'..=b'Y'] => Ok(Control::State(StateId((c - b'A') as u16))),
            [b'q', rest @ ..] => {
                let n: u16 = std::str::from_utf8(rest)
                    .ok()
                    .and_then(|r| r.parse().ok())
                    .ok_or_else(bad)?;
                if n < 25 {
                    return Err(bad());
                }
                Ok(Control::State(StateId(n)))
            }
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for Control {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Control::State(s) => s.fmt(f),
            Control::Halt => f.write_str("Z"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Transition {
    pub write: Symbol,
    pub dir: Dir,
    pub next: Control,
}

impl Transition {
    pub fn new(write: Symbol, dir: Dir, next: Control) -> Self {
        debug_assert!(write <= 1);
        Transition { write, dir, next }
    }

    pub fn to(write: Symbol, dir: Dir, next: u16) -> Self {
        Transition::new(write, dir, Control::State(StateId(next)))
    }

    pub fn halt(write: Symbol, dir: Dir) -> Self {
        Transition::new(write, dir, Control::Halt)
    }
}

impl fmt::Display for Transition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}{}", self.write, self.dir, self.next)
    }
}

/// An n-state, 2-symbol transition table. Entries may be undefined.
///
/// A machine produced by the halt-harm compiler additionally remembers
/// which of its states form the harm gadget; parsed machines never do.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Machine {
    table: Vec<[Option<Transition>; 2]>,
    gadget: Option<StateId>,
}

impl Machine {
    /// A machine with `n_states` states and every entry undefined.
    pub fn new(n_states: usize) -> Self {
        assert!(n_states >= 1, "a machine needs at least one state");
        assert!(n_states <= u16::MAX as usize, "too many states");
        Machine {
            table: vec![[None, None]; n_states],
            gadget: None,
        }
    }

    /// Builds a machine from rows `[on 0, on 1]`.
    ///
    /// Panics when a transition names a state outside the table.
    pub fn from_rows(rows: Vec<[Option<Transition>; 2]>) -> Self {
        let m = Machine {
            table: rows,
            gadget: None,
        };
        assert!(!m.table.is_empty(), "a machine needs at least one state");
        assert!(m.targets_valid(), "transition targets an unknown state");
        m
    }

    fn targets_valid(&self) -> bool {
        self.table.iter().flatten().flatten().all(|t| match t.next {
            Control::State(s) => s.index() < self.table.len(),
            Control::Halt => true,
        }) && self.table.iter().flatten().flatten().all(|t| t.write <= 1)
    }

    #[inline]
    pub fn n_states(&self) -> usize {
        self.table.len()
    }

    #[inline]
    pub fn get(&self, state: StateId, read: Symbol) -> Option<Transition> {
        self.table[state.index()][read as usize]
    }

    pub fn set(&mut self, state: StateId, read: Symbol, t: Option<Transition>) {
        if let Some(Transition {
            next: Control::State(s),
            ..
        }) = t
        {
            assert!(
                s.index() < self.table.len(),
                "transition targets an unknown state"
            );
        }
        self.table[state.index()][read as usize] = t;
    }

    pub fn rows(&self) -> &[[Option<Transition>; 2]] {
        &self.table
    }

    pub fn defined_count(&self) -> usize {
        self.table.iter().flatten().filter(|t| t.is_some()).count()
    }

    /// `(state, read)` pairs with no transition.
    pub fn undefined_entries(&self) -> impl Iterator<Item = (StateId, Symbol)> + '_ {
        self.table.iter().enumerate().flat_map(|(i, row)| {
            row.iter()
                .enumerate()
                .filter(|(_, t)| t.is_none())
                .map(move |(s, _)| (StateId(i as u16), s as Symbol))
        })
    }

    /// First state of the two-state harm gadget, when this machine was compiled
    /// by [`crate::containment::make_halt_harm`].
    pub fn gadget(&self) -> Option<StateId> {
        self.gadget
    }

    pub(crate) fn with_gadget(mut self, first: StateId) -> Self {
        assert!(first.index() + 1 < self.table.len());
        self.gadget = Some(first);
        self
    }
}

impl fmt::Display for Machine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match crate::format::serialize(self) {
            Ok(s) => f.write_str(&s),
            Err(_) => write!(f, "<machine with {} states>", self.n_states()),
        }
    }
}

/// A finite input word written from cell 0.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct InputWord(Vec<Symbol>);

impl InputWord {
    pub fn empty() -> Self {
        InputWord(Vec::new())
    }

    pub fn new(symbols: Vec<Symbol>) -> Self {
        assert!(
            symbols.iter().all(|&s| s <= 1),
            "input symbols must be 0 or 1"
        );
        InputWord(symbols)
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// True when the word does not end in a blank. Words differing only in
    /// trailing blanks describe the same tape.
    pub fn is_canonical(&self) -> bool {
        self.0.last() != Some(&BLANK)
    }

    /// The `index`-th word in length-lexicographic order over {0, 1}
    /// (`""`, `"0"`, `"1"`, `"00"`, ...).
    pub fn nth_length_lex(index: u64) -> Self {
        // index + 1 written in binary, leading 1 dropped
        let v = index + 1;
        let bits = 64 - v.leading_zeros() as usize;
        InputWord((0..bits - 1).rev().map(|i| ((v >> i) & 1) as u8).collect())
    }
}

impl fmt::Display for InputWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.0 {
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid input word: character {0:?} at offset {1} is not 0 or 1")]
pub struct InputWordError(pub char, pub usize);

impl FromStr for InputWord {
    type Err = InputWordError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.chars()
            .enumerate()
            .map(|(i, c)| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                other => Err(InputWordError(other, i)),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(InputWord)
    }
}

impl From<InputWord> for String {
    fn from(w: InputWord) -> String {
        w.to_string()
    }
}

impl TryFrom<String> for InputWord {
    type Error = InputWordError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

/// Control state, head position and tape.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Configuration {
    pub state: Control,
    pub head: i64,
    pub tape: DenseTape,
}

impl Configuration {
    /// State `A`, head on cell 0, `word` written from cell 0.
    pub fn initial(word: &InputWord) -> Self {
        Configuration {
            state: Control::State(StateId::START),
            head: 0,
            tape: DenseTape::with_input(word),
        }
    }

    pub fn is_halted(&self) -> bool {
        self.state == Control::Halt
    }

    /// Applies one transition in place. Returns `None` for a `Z` configuration.
    pub fn advance(&mut self, m: &Machine) -> Option<StepKind> {
        let state = self.state.state()?;
        let read = self.tape.cell(self.head);
        let Some(t) = m.get(state, read) else {
            return Some(StepKind::HaltedByUndefined);
        };
        self.tape
            .write(self.head, t.write)
            .expect("reference stepper runs without a cell budget");
        self.head += t.dir.delta();
        self.tape.visit(self.head);
        self.state = t.next;
        Some(match t.next {
            Control::Halt => StepKind::HaltedByZ,
            Control::State(_) => StepKind::Moved,
        })
    }

    /// Structural equality as cell functions: state, head and every cell value.
    pub fn same_as(&self, other: &Configuration) -> bool {
        self.state == other.state && self.head == other.head && self.tape.same_cells(&other.tape)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepKind {
    Moved,
    HaltedByZ,
    HaltedByUndefined,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StepResult {
    Next(Configuration),
    /// The `Z` transition's write and move have been applied.
    HaltedByZ(Configuration),
    /// No entry for the current state and symbol; nothing was written.
    HaltedByUndefined,
}

pub fn initial_configuration(_m: &Machine, w: &InputWord) -> Configuration {
    Configuration::initial(w)
}

/// One step of `m` from `c`. `None` when `c` is already halted.
pub fn step(m: &Machine, c: &Configuration) -> Option<StepResult> {
    let mut next = c.clone();
    Some(match next.advance(m)? {
        StepKind::Moved => StepResult::Next(next),
        StepKind::HaltedByZ => StepResult::HaltedByZ(next),
        StepKind::HaltedByUndefined => StepResult::HaltedByUndefined,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::format::parse;

    fn halter() -> Machine {
        parse("1RZ---").unwrap()
    }

    #[test]
    fn control_serializes_as_letters() {
        for (c, s) in [
            (Control::Halt, "\"Z\""),
            (Control::State(StateId(0)), "\"A\""),
            (Control::State(StateId(24)), "\"Y\""),
            (Control::State(StateId(300)), "\"q300\""),
        ] {
            assert_eq!(serde_json::to_string(&c).unwrap(), s);
            assert_eq!(serde_json::from_str::<Control>(s).unwrap(), c);
        }
        for bad in ["\"q3\"", "\"AB\"", "\"z\"", "\"q\""] {
            assert!(serde_json::from_str::<Control>(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn single_transition_halter_halts_by_z() {
        let m = halter();
        let c = initial_configuration(&m, &InputWord::empty());
        match step(&m, &c) {
            Some(StepResult::HaltedByZ(next)) => {
                assert_eq!(next.tape.cell(0), 1);
                assert_eq!(next.tape.marks(), 1);
                assert_eq!(next.head, 1);
                assert!(next.is_halted());
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn champion_first_step() {
        let m = parse("1RB1LC_1RC1RB_1RD0LE_1LA1LD_1RZ0LA").unwrap();
        let c = initial_configuration(&m, &InputWord::empty());
        let Some(StepResult::Next(next)) = step(&m, &c) else {
            panic!("expected a regular step")
        };
        assert_eq!(next.tape.cell(0), 1);
        assert_eq!(next.head, 1);
        assert_eq!(next.state, Control::State(StateId(1)));
    }

    #[test]
    fn undefined_entry_halts_without_effect() {
        let m = halter();
        let c = initial_configuration(&m, &"1".parse().unwrap());
        assert_eq!(step(&m, &c), Some(StepResult::HaltedByUndefined));
        assert_eq!(c.tape.cell(0), 1);
    }

    #[test]
    fn halted_configurations_have_no_successor() {
        let m = halter();
        let mut c = initial_configuration(&m, &InputWord::empty());
        c.state = Control::Halt;
        assert_eq!(step(&m, &c), None);
    }

    #[test]
    fn initial_configuration_writes_word_from_zero() {
        let m = halter();
        let c = initial_configuration(&m, &InputWord::empty());
        assert_eq!(c.state, Control::State(StateId::START));
        assert_eq!(c.head, 0);
        assert_eq!(c.tape.marks(), 0);

        let c = initial_configuration(&m, &"101".parse().unwrap());
        assert_eq!([c.tape.cell(0), c.tape.cell(1), c.tape.cell(2)], [1, 0, 1]);
        assert_eq!(c.tape.cell(-1), 0);
        assert_eq!(c.tape.cell(3), 0);

        let right = parse("1RA1RA").unwrap();
        let c = initial_configuration(&right, &"1".parse().unwrap());
        let Some(StepResult::Next(c)) = step(&right, &c) else {
            panic!()
        };
        assert_eq!(c.head, 1);
        assert_eq!(c.state, Control::State(StateId(0)));
    }

    #[test]
    fn length_lex_order() {
        let words: Vec<String> = (0..7)
            .map(|i| InputWord::nth_length_lex(i).to_string())
            .collect();
        assert_eq!(words, ["", "0", "1", "00", "01", "10", "11"]);
    }

    #[test]
    fn input_word_rejects_other_characters() {
        assert_eq!("10x".parse::<InputWord>(), Err(InputWordError('x', 2)));
    }
}
