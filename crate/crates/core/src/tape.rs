//! Tape representations.
//!
//! [`DenseTape`] backs the reference stepper; [`RleTape`] stores the tape as
//! runs fanning out from the head so the accelerated stepper can cross a
//! uniform run in one move. Both keep the mark count incrementally.

use serde::{Deserialize, Serialize};

use crate::machine::{Dir, InputWord, Symbol, BLANK, MARK};

/// Default cell budget for a dense tape (2^30 cells).
pub const DEFAULT_TAPE_CELLS: usize = 1 << 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("tape cell budget of {budget} cells exceeded writing cell {cell}")]
pub struct SpaceLimitExceeded {
    pub cell: i64,
    pub budget: usize,
}

/// Representation-independent tape contract.
pub trait Tape {
    /// Symbol at `i`; unvisited cells are blank.
    fn cell(&self, i: i64) -> Symbol;

    fn write(&mut self, i: i64, s: Symbol) -> Result<(), SpaceLimitExceeded>;

    /// Number of cells holding a mark, maintained incrementally.
    fn marks(&self) -> u64;

    /// Smallest and largest visited cell.
    fn extent(&self) -> (i64, i64);

    /// Records that the head has been on cell `i`.
    fn visit(&mut self, i: i64);

    /// Full recount of marks, independent of the incremental counter.
    fn recount(&self) -> u64;
}

/// Cells over an index range, as stored in outcome records.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TapeSnapshot {
    /// Index of the first cell in `cells`.
    pub start: i64,
    /// One character per cell, `0` or `1`.
    pub cells: String,
    /// Set when the visited extent was wider than the snapshot cap; `cells`
    /// then holds the cap-sized window around the head.
    pub truncated: bool,
}

impl TapeSnapshot {
    pub fn marks(&self) -> u64 {
        self.cells.bytes().filter(|&b| b == b'1').count() as u64
    }

    /// The snapshot with blank cells trimmed from both ends.
    pub fn trimmed(&self) -> TapeSnapshot {
        let first = self.cells.find('1');
        match first {
            None => TapeSnapshot {
                start: 0,
                cells: String::new(),
                truncated: self.truncated,
            },
            Some(a) => {
                let b = self.cells.rfind('1').unwrap();
                TapeSnapshot {
                    start: self.start + a as i64,
                    cells: self.cells[a..=b].to_string(),
                    truncated: self.truncated,
                }
            }
        }
    }

    fn window(extent: (i64, i64), head: i64, cap: usize) -> (i64, i64, bool) {
        let (lo, hi) = extent;
        let width = (hi - lo + 1) as u64;
        if width <= cap as u64 {
            return (lo, hi, false);
        }
        let cap = cap.max(1) as i64;
        let start = (head - cap / 2).clamp(lo, hi - cap + 1);
        (start, start + cap - 1, true)
    }
}

/// Array-backed tape growing by doubling in both directions from cell 0.
#[derive(Clone, Debug)]
pub struct DenseTape {
    cells: Vec<Symbol>,
    /// Cell index of `cells[0]`.
    origin: i64,
    marks: u64,
    lo: i64,
    hi: i64,
    max_cells: usize,
}

impl Default for DenseTape {
    fn default() -> Self {
        Self::new()
    }
}

impl DenseTape {
    pub fn new() -> Self {
        Self::with_budget(DEFAULT_TAPE_CELLS)
    }

    pub fn with_budget(max_cells: usize) -> Self {
        DenseTape {
            cells: Vec::new(),
            origin: 0,
            marks: 0,
            lo: 0,
            hi: 0,
            max_cells,
        }
    }

    pub fn with_input(word: &InputWord) -> Self {
        let mut t = Self::new();
        t.load(word);
        t
    }

    pub(crate) fn load(&mut self, word: &InputWord) {
        self.cells = word.symbols().to_vec();
        self.origin = 0;
        self.marks = word.symbols().iter().filter(|&&s| s == MARK).count() as u64;
        self.lo = 0;
        self.hi = word.len().saturating_sub(1) as i64;
    }

    pub(crate) fn from_raw(cells: Vec<Symbol>, origin: i64, lo: i64, hi: i64, marks: u64) -> Self {
        DenseTape {
            cells,
            origin,
            marks,
            lo,
            hi,
            max_cells: DEFAULT_TAPE_CELLS,
        }
    }

    pub fn budget(&self) -> usize {
        self.max_cells
    }

    fn ensure(&mut self, i: i64) -> Result<usize, SpaceLimitExceeded> {
        let len = self.cells.len() as i64;
        if i >= self.origin && i < self.origin + len {
            return Ok((i - self.origin) as usize);
        }
        let err = SpaceLimitExceeded {
            cell: i,
            budget: self.max_cells,
        };
        if len == 0 {
            self.cells = vec![BLANK; 16.min(self.max_cells.max(1))];
            self.origin = i;
            return if self.max_cells == 0 { Err(err) } else { Ok(0) };
        }
        let end = self.origin + len;
        let needed = if i < self.origin {
            end - i
        } else {
            i - self.origin + 1
        };
        if needed as u64 > self.max_cells as u64 {
            return Err(err);
        }
        let new_len = (len * 2).max(needed).min(self.max_cells as i64);
        let extra = (new_len - len) as usize;
        if i < self.origin {
            let mut grown = vec![BLANK; extra];
            grown.extend_from_slice(&self.cells);
            self.cells = grown;
            self.origin -= extra as i64;
        } else {
            self.cells.resize(new_len as usize, BLANK);
        }
        Ok((i - self.origin) as usize)
    }

    /// Smallest and largest cell holding a mark.
    pub fn nonblank_span(&self) -> Option<(i64, i64)> {
        let first = self.cells.iter().position(|&s| s == MARK)?;
        let last = self.cells.iter().rposition(|&s| s == MARK)?;
        Some((self.origin + first as i64, self.origin + last as i64))
    }

    /// Equality as cell functions, ignoring extents and allocation.
    pub fn same_cells(&self, other: &DenseTape) -> bool {
        match (self.nonblank_span(), other.nonblank_span()) {
            (None, None) => true,
            (Some(a), Some(b)) if a == b => (a.0..=a.1).all(|i| self.cell(i) == other.cell(i)),
            _ => false,
        }
    }

    /// Cells `[from, from + len)` as a vector.
    pub fn range(&self, from: i64, len: usize) -> Vec<Symbol> {
        (0..len as i64).map(|k| self.cell(from + k)).collect()
    }

    pub fn snapshot(&self, head: i64, cap: usize) -> TapeSnapshot {
        let (start, end, truncated) = TapeSnapshot::window(self.extent(), head, cap);
        let cells = (start..=end)
            .map(|i| if self.cell(i) == MARK { '1' } else { '0' })
            .collect();
        TapeSnapshot {
            start,
            cells,
            truncated,
        }
    }
}

impl PartialEq for DenseTape {
    fn eq(&self, other: &Self) -> bool {
        self.extent() == other.extent() && self.same_cells(other)
    }
}

impl Eq for DenseTape {}

impl Tape for DenseTape {
    #[inline]
    fn cell(&self, i: i64) -> Symbol {
        let k = i - self.origin;
        if k >= 0 && (k as usize) < self.cells.len() {
            self.cells[k as usize]
        } else {
            BLANK
        }
    }

    fn write(&mut self, i: i64, s: Symbol) -> Result<(), SpaceLimitExceeded> {
        if s == BLANK && self.cell(i) == BLANK {
            self.visit(i);
            return Ok(());
        }
        let k = self.ensure(i)?;
        let old = std::mem::replace(&mut self.cells[k], s);
        self.marks = self.marks + (s == MARK) as u64 - (old == MARK) as u64;
        self.visit(i);
        Ok(())
    }

    fn marks(&self) -> u64 {
        self.marks
    }

    fn extent(&self) -> (i64, i64) {
        (self.lo, self.hi)
    }

    #[inline]
    fn visit(&mut self, i: i64) {
        self.lo = self.lo.min(i);
        self.hi = self.hi.max(i);
    }

    fn recount(&self) -> u64 {
        self.cells.iter().filter(|&&s| s == MARK).count() as u64
    }
}

/// A maximal block of equal symbols.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Run {
    pub symbol: Symbol,
    pub len: u64,
}

impl Run {
    pub fn new(symbol: Symbol, len: u64) -> Self {
        Run { symbol, len }
    }
}

/// Merges adjacent equal-symbol runs and drops empty ones.
pub fn canonicalize_runs(runs: &[Run]) -> Vec<Run> {
    let mut out: Vec<Run> = Vec::with_capacity(runs.len());
    for r in runs.iter().filter(|r| r.len > 0) {
        match out.last_mut() {
            Some(last) if last.symbol == r.symbol => last.len += r.len,
            _ => out.push(*r),
        }
    }
    out
}

/// How far the symbol under the head repeats in one direction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RunAhead {
    Finite(u64),
    /// Blank under the head and only implicit blanks beyond.
    Infinite,
}

/// Run-length-encoded tape centred on the head.
///
/// `left` and `right` are stacks whose tops are the runs adjacent to the
/// head. The outermost runs are never blank: blanks beyond them are implicit.
#[derive(Clone, Debug)]
pub struct RleTape {
    left: Vec<Run>,
    right: Vec<Run>,
    under: Symbol,
    head: i64,
    marks: u64,
    lo: i64,
    hi: i64,
}

impl Default for RleTape {
    fn default() -> Self {
        Self::new()
    }
}

impl RleTape {
    pub fn new() -> Self {
        RleTape {
            left: Vec::new(),
            right: Vec::new(),
            under: BLANK,
            head: 0,
            marks: 0,
            lo: 0,
            hi: 0,
        }
    }

    pub fn with_input(word: &InputWord) -> Self {
        let syms = word.symbols();
        let mut t = Self::new();
        if let Some((&first, rest)) = syms.split_first() {
            t.under = first;
            let outward: Vec<Run> = rest.iter().map(|&s| Run::new(s, 1)).collect();
            t.right = Self::stack_from_outward(&outward);
            t.hi = syms.len() as i64 - 1;
        }
        t.marks = t.recount();
        t
    }

    /// Builds a tape from runs listed outward from the head on each side.
    /// The result is canonical.
    pub fn from_parts(
        left_outward: &[Run],
        under: Symbol,
        right_outward: &[Run],
        head: i64,
    ) -> Self {
        let mut t = RleTape {
            left: Self::stack_from_outward(left_outward),
            right: Self::stack_from_outward(right_outward),
            under,
            head,
            marks: 0,
            lo: head,
            hi: head,
        };
        t.marks = t.recount();
        t
    }

    fn stack_from_outward(outward: &[Run]) -> Vec<Run> {
        let mut runs = canonicalize_runs(outward);
        while runs.last().is_some_and(|r| r.symbol == BLANK) {
            runs.pop();
        }
        runs.reverse();
        runs
    }

    /// Runs on each side listed outward from the head.
    pub fn left_runs(&self) -> Vec<Run> {
        self.left.iter().rev().copied().collect()
    }

    pub fn right_runs(&self) -> Vec<Run> {
        self.right.iter().rev().copied().collect()
    }

    pub fn head(&self) -> i64 {
        self.head
    }

    #[inline]
    pub fn under(&self) -> Symbol {
        self.under
    }

    pub fn run_count(&self) -> usize {
        self.left.len() + self.right.len() + 1
    }

    /// Restores the canonical form: merged, non-empty runs with no
    /// explicit outermost blanks.
    pub fn canonicalize(self) -> Self {
        let left = Self::stack_from_outward(&self.left_runs());
        let right = Self::stack_from_outward(&self.right_runs());
        RleTape {
            left,
            right,
            ..self
        }
    }

    pub fn is_canonical(&self) -> bool {
        let ok = |stack: &Vec<Run>| {
            stack.iter().all(|r| r.len > 0)
                && stack.windows(2).all(|w| w[0].symbol != w[1].symbol)
                && stack.first().is_none_or(|r| r.symbol != BLANK)
        };
        ok(&self.left) && ok(&self.right)
    }

    /// Equality of the encoded cell function and head position.
    pub fn same_cells(&self, other: &RleTape) -> bool {
        self.head == other.head
            && self.under == other.under
            && self.left == other.left
            && self.right == other.right
    }

    #[inline]
    fn side(&mut self, dir: Dir) -> &mut Vec<Run> {
        match dir {
            Dir::L => &mut self.left,
            Dir::R => &mut self.right,
        }
    }

    #[inline]
    fn push(stack: &mut Vec<Run>, symbol: Symbol, len: u64) {
        match stack.last_mut() {
            Some(top) if top.symbol == symbol => top.len += len,
            None if symbol == BLANK => {}
            _ => stack.push(Run::new(symbol, len)),
        }
    }

    #[inline]
    fn pop_cell(stack: &mut Vec<Run>) -> Symbol {
        match stack.last_mut() {
            None => BLANK,
            Some(top) => {
                let s = top.symbol;
                top.len -= 1;
                if top.len == 0 {
                    stack.pop();
                }
                s
            }
        }
    }

    /// Moves the head one cell without touching the visited extent.
    #[inline]
    fn shift(&mut self, dir: Dir) {
        let under = self.under;
        Self::push(self.side(dir.flip()), under, 1);
        self.under = Self::pop_cell(self.side(dir));
        self.head += dir.delta();
    }

    #[inline]
    pub fn move_head(&mut self, dir: Dir) {
        self.shift(dir);
        self.lo = self.lo.min(self.head);
        self.hi = self.hi.max(self.head);
    }

    #[inline]
    pub fn write_under(&mut self, s: Symbol) {
        self.marks = self.marks + (s == MARK) as u64 - (self.under == MARK) as u64;
        self.under = s;
    }

    /// Cells after the head in `dir` holding the same symbol as the head cell.
    #[inline]
    pub fn run_ahead(&self, dir: Dir) -> RunAhead {
        let stack = match dir {
            Dir::L => &self.left,
            Dir::R => &self.right,
        };
        match stack.last() {
            Some(top) if top.symbol == self.under => RunAhead::Finite(top.len),
            Some(_) => RunAhead::Finite(0),
            None if self.under == BLANK => RunAhead::Infinite,
            None => RunAhead::Finite(0),
        }
    }

    /// Applies `k` iterations of a transition that writes `write`, moves
    /// `dir` and stays in its state: the head cell and the `k - 1` cells
    /// after it become `write` and the head advances `k` cells.
    ///
    /// The caller guarantees those `k` cells all hold the head symbol.
    pub fn sweep(&mut self, dir: Dir, write: Symbol, k: u64) {
        debug_assert!(k >= 1);
        let s = self.under;
        Self::push(self.side(dir.flip()), write, k);
        if k > 1 {
            let ahead = self.side(dir);
            if let Some(top) = ahead.last_mut() {
                debug_assert!(top.symbol == s && top.len >= k - 1);
                top.len -= k - 1;
                if top.len == 0 {
                    ahead.pop();
                }
            } else {
                debug_assert_eq!(s, BLANK);
            }
        }
        self.under = Self::pop_cell(self.side(dir));
        let delta = (write == MARK) as i64 - (s == MARK) as i64;
        self.marks = (self.marks as i64 + delta * k as i64) as u64;
        self.head += dir.delta() * k as i64;
        self.lo = self.lo.min(self.head);
        self.hi = self.hi.max(self.head);
    }

    pub fn to_dense(&self) -> DenseTape {
        let mut t = DenseTape::new();
        let (lo, hi) = self.extent();
        t.visit(lo);
        t.visit(hi);
        self.for_each_nonblank(|i| {
            t.write(i, MARK).expect("decoded tape within budget");
        });
        t
    }

    fn for_each_nonblank(&self, mut f: impl FnMut(i64)) {
        if self.under == MARK {
            f(self.head);
        }
        let mut pos = self.head + 1;
        for r in self.right.iter().rev() {
            if r.symbol == MARK {
                (pos..pos + r.len as i64).for_each(&mut f);
            }
            pos += r.len as i64;
        }
        let mut pos = self.head - 1;
        for r in self.left.iter().rev() {
            if r.symbol == MARK {
                ((pos - r.len as i64 + 1)..=pos).for_each(&mut f);
            }
            pos -= r.len as i64;
        }
    }

    pub fn snapshot(&self, cap: usize) -> TapeSnapshot {
        let (start, end, truncated) = TapeSnapshot::window(self.extent(), self.head, cap);
        let mut cells = vec![b'0'; (end - start + 1) as usize];
        self.for_each_nonblank(|i| {
            if i >= start && i <= end {
                cells[(i - start) as usize] = b'1';
            }
        });
        TapeSnapshot {
            start,
            cells: String::from_utf8(cells).expect("ascii"),
            truncated,
        }
    }
}

impl Tape for RleTape {
    fn cell(&self, i: i64) -> Symbol {
        let (stack, mut offset) = match i.cmp(&self.head) {
            std::cmp::Ordering::Equal => return self.under,
            std::cmp::Ordering::Greater => (&self.right, (i - self.head - 1) as u64),
            std::cmp::Ordering::Less => (&self.left, (self.head - i - 1) as u64),
        };
        for r in stack.iter().rev() {
            if offset < r.len {
                return r.symbol;
            }
            offset -= r.len;
        }
        BLANK
    }

    fn write(&mut self, i: i64, s: Symbol) -> Result<(), SpaceLimitExceeded> {
        let home = self.head;
        let toward = if i > home { Dir::R } else { Dir::L };
        while self.head != i {
            self.shift(toward);
        }
        self.write_under(s);
        while self.head != home {
            self.shift(toward.flip());
        }
        self.visit(i);
        Ok(())
    }

    fn marks(&self) -> u64 {
        self.marks
    }

    fn extent(&self) -> (i64, i64) {
        (self.lo, self.hi)
    }

    fn visit(&mut self, i: i64) {
        self.lo = self.lo.min(i);
        self.hi = self.hi.max(i);
    }

    fn recount(&self) -> u64 {
        let side = |stack: &Vec<Run>| {
            stack
                .iter()
                .filter(|r| r.symbol == MARK)
                .map(|r| r.len)
                .sum::<u64>()
        };
        (self.under == MARK) as u64 + side(&self.left) + side(&self.right)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn write_adjusts_marks() {
        let mut t = DenseTape::new();
        t.write(0, 1).unwrap();
        assert_eq!(t.marks(), 1);
        t.write(0, 1).unwrap();
        assert_eq!(t.marks(), 1);
        t.write(0, 0).unwrap();
        assert_eq!(t.marks(), 0);
    }

    #[test]
    fn dense_tape_budget() {
        let mut t = DenseTape::with_budget(4);
        for i in 0..4 {
            t.write(i, 1).unwrap();
        }
        assert_eq!(
            t.write(-1, 1),
            Err(SpaceLimitExceeded {
                cell: -1,
                budget: 4
            })
        );
        // blanks never allocate
        t.write(-5, 0).unwrap();
        assert_eq!(t.marks(), 4);
    }

    #[test]
    fn canonicalize_examples() {
        let r = |s, l| Run::new(s, l);
        assert_eq!(canonicalize_runs(&[r(1, 2), r(1, 3)]), vec![r(1, 5)]);
        assert_eq!(
            canonicalize_runs(&[r(1, 1), r(0, 0), r(1, 1)]),
            vec![r(1, 2)]
        );
        let already = vec![r(1, 2), r(0, 1), r(1, 4)];
        assert_eq!(canonicalize_runs(&already), already);
    }

    #[test]
    fn rle_canonicalize_trims_outer_blanks() {
        let t = RleTape::from_parts(&[Run::new(1, 1), Run::new(0, 3)], 0, &[Run::new(0, 2)], 0);
        assert!(t.is_canonical());
        assert_eq!(t.left_runs(), vec![Run::new(1, 1)]);
        assert!(t.right_runs().is_empty());
    }

    #[test]
    fn sweep_over_run() {
        // head on the first of three 1s, sweep right writing 0
        let mut t =
            RleTape::from_parts(&[], 1, &[Run::new(1, 2), Run::new(0, 1), Run::new(1, 1)], 0);
        assert_eq!(t.run_ahead(Dir::R), RunAhead::Finite(2));
        t.sweep(Dir::R, 0, 3);
        assert_eq!(t.head(), 3);
        assert_eq!(t.under(), 0);
        assert_eq!(t.marks(), 1);
        assert_eq!(t.marks(), t.recount());
        assert_eq!(
            (0..5).map(|i| t.cell(i)).collect::<Vec<_>>(),
            [0, 0, 0, 0, 1]
        );
        assert!(t.is_canonical());
    }

    #[derive(Debug, Clone)]
    enum Op {
        Write(i64, u8),
        Move(bool),
    }

    fn ops() -> impl Strategy<Value = Vec<Op>> {
        prop::collection::vec(
            prop_oneof![
                (-20i64..20, 0u8..2).prop_map(|(i, s)| Op::Write(i, s)),
                any::<bool>().prop_map(Op::Move),
            ],
            0..200,
        )
    }

    proptest! {
        #[test]
        fn dense_and_rle_agree(ops in ops(), word in prop::collection::vec(0u8..2, 0..8)) {
            let word = InputWord::new(word);
            let mut dense = DenseTape::with_input(&word);
            let mut rle = RleTape::with_input(&word);
            let mut head = 0i64;
            for op in ops {
                match op {
                    Op::Write(i, s) => {
                        dense.write(i, s).unwrap();
                        rle.write(i, s).unwrap();
                    }
                    Op::Move(right) => {
                        let dir = if right { Dir::R } else { Dir::L };
                        head += dir.delta();
                        dense.visit(head);
                        rle.move_head(dir);
                    }
                }
                prop_assert_eq!(dense.marks(), rle.marks());
                prop_assert_eq!(dense.marks(), dense.recount());
                prop_assert_eq!(rle.marks(), rle.recount());
                prop_assert_eq!(dense.extent(), rle.extent());
                prop_assert!(rle.is_canonical());
            }
            for i in -30..30 {
                prop_assert_eq!(dense.cell(i), rle.cell(i));
            }
            prop_assert_eq!(dense.snapshot(head, 1 << 16), rle.snapshot(1 << 16));
            prop_assert!(rle.to_dense().same_cells(&dense));
        }

        #[test]
        fn canonical_form_is_unique(
            cells in prop::collection::vec(0u8..2, 1..40),
            split_a in prop::collection::vec(1u64..4, 0..40),
            split_b in prop::collection::vec(1u64..4, 0..40),
        ) {
            // Encode the same cells to the right of a blank head cell using two
            // different (non-canonical) run splittings.
            let encode = |splits: &[u64]| {
                let mut runs = Vec::new();
                let mut i = 0usize;
                let mut k = 0usize;
                while i < cells.len() {
                    let len = splits.get(k).copied().unwrap_or(1).min((cells.len() - i) as u64);
                    // split only inside equal-symbol stretches
                    let mut n = 0u64;
                    while n < len && i + (n as usize) < cells.len() && cells[i + n as usize] == cells[i] {
                        n += 1;
                    }
                    runs.push(Run::new(cells[i], n));
                    runs.push(Run::new(1 - cells[i], 0));
                    i += n as usize;
                    k += 1;
                }
                runs
            };
            let a = RleTape::from_parts(&[], 0, &encode(&split_a), 0);
            let b = RleTape::from_parts(&[], 0, &encode(&split_b), 0);
            prop_assert!(a.same_cells(&b));
            prop_assert!(a.clone().canonicalize().same_cells(&a));
        }
    }
}
