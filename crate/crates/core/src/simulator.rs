//! Direct and run-length-accelerated simulation.
//!
//! Both steppers share one observable contract. A step that would widen the
//! visited extent beyond `max_cells` is not executed and ends the run with
//! [`OutcomeKind::SpaceLimit`]; the step limit is checked first. Halting
//! transitions always complete.

use std::fmt;
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::machine::{Configuration, Control, Dir, InputWord, Machine, StateId, StepResult};
use crate::tape::{DenseTape, RleTape, RunAhead, TapeSnapshot};

pub const DEFAULT_MAX_STEPS: u64 = 100_000_000;
pub const DEFAULT_MAX_CELLS: u64 = 1 << 26;
pub const DEFAULT_SNAPSHOT_CELLS: usize = 1 << 16;

/// How often (in loop iterations) the wall-clock budget is polled.
const CLOCK_POLL: u64 = 1 << 16;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunLimits {
    pub max_steps: BigUint,
    pub max_cells: u64,
    pub wall_clock: Option<Duration>,
    pub snapshot_cells: usize,
}

impl Default for RunLimits {
    fn default() -> Self {
        RunLimits {
            max_steps: BigUint::from(DEFAULT_MAX_STEPS),
            max_cells: DEFAULT_MAX_CELLS,
            wall_clock: None,
            snapshot_cells: DEFAULT_SNAPSHOT_CELLS,
        }
    }
}

impl RunLimits {
    pub fn steps(max_steps: u64) -> Self {
        assert!(max_steps >= 1, "max-steps must be at least 1");
        RunLimits {
            max_steps: BigUint::from(max_steps),
            ..Default::default()
        }
    }

    pub fn with_cells(mut self, max_cells: u64) -> Self {
        self.max_cells = max_cells.max(1);
        self
    }

    pub fn with_wall_clock(mut self, budget: Duration) -> Self {
        self.wall_clock = Some(budget);
        self
    }

    pub fn with_snapshot_cells(mut self, cells: usize) -> Self {
        self.snapshot_cells = cells;
        self
    }

    /// `max_steps` clamped to `u64`.
    pub fn max_steps_u64(&self) -> u64 {
        self.max_steps.to_u64().unwrap_or(u64::MAX)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeKind {
    Halted,
    StepLimit,
    SpaceLimit,
    TimeLimit,
}

impl fmt::Display for OutcomeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutcomeKind::Halted => "halted",
            OutcomeKind::StepLimit => "step_limit",
            OutcomeKind::SpaceLimit => "space_limit",
            OutcomeKind::TimeLimit => "time_limit",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub kind: OutcomeKind,
    #[serde(with = "crate::record::decimal")]
    pub steps: BigUint,
    pub marks: u64,
    /// `Z` after a halting transition; the stuck state after an undefined
    /// entry; the current state when a limit stopped the run.
    pub final_state: Control,
    pub head: i64,
    pub halted_via_gadget: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub tape: Option<TapeSnapshot>,
}

impl RunOutcome {
    pub fn halted(&self) -> bool {
        self.kind == OutcomeKind::Halted
    }

    pub fn steps_u64(&self) -> Option<u64> {
        self.steps.to_u64()
    }

    /// The fields both steppers must agree on.
    pub fn observable(&self) -> (OutcomeKind, &BigUint, u64, Control, i64) {
        (
            self.kind,
            &self.steps,
            self.marks,
            self.final_state,
            self.head,
        )
    }
}

impl fmt::Display for RunOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} steps={} marks={} state={}",
            self.kind, self.steps, self.marks, self.final_state
        )?;
        if self.halted_via_gadget {
            f.write_str(" via-gadget")?;
        }
        Ok(())
    }
}

/// Packed transition table: one word per `(state, symbol)`.
///
/// Layout: bit 31 defined, bit 30 halts, bit 17 write, bit 16 moves right,
/// bits 0..16 next state.
#[derive(Clone)]
pub(crate) struct Table(Vec<u32>);

const DEFINED: u32 = 1 << 31;
const HALTS: u32 = 1 << 30;
const WRITE: u32 = 1 << 17;
const RIGHT: u32 = 1 << 16;

impl Table {
    pub(crate) fn new(m: &Machine) -> Self {
        let mut v = Vec::with_capacity(m.n_states() * 2);
        for row in m.rows() {
            for t in row {
                v.push(match t {
                    None => 0,
                    Some(t) => {
                        let mut w = DEFINED;
                        if t.write == 1 {
                            w |= WRITE;
                        }
                        if t.dir == Dir::R {
                            w |= RIGHT;
                        }
                        match t.next {
                            Control::Halt => w |= HALTS,
                            Control::State(s) => w |= s.0 as u32,
                        }
                        w
                    }
                });
            }
        }
        Table(v)
    }

    #[inline(always)]
    pub(crate) fn get(&self, state: u32, sym: u8) -> u32 {
        self.0[(state as usize) << 1 | sym as usize]
    }
}

#[inline(always)]
fn next_of(t: u32) -> u32 {
    t & 0xFFFF
}

struct Clock {
    deadline: Option<Instant>,
}

impl Clock {
    fn new(limits: &RunLimits) -> Self {
        Clock {
            deadline: limits.wall_clock.map(|d| Instant::now() + d),
        }
    }

    #[inline]
    fn expired(&self) -> bool {
        self.deadline.is_some_and(|d| Instant::now() >= d)
    }
}

fn gadget_halt(
    m: &Machine,
    kind: OutcomeKind,
    halting_from: Option<u32>,
    final_state: Control,
) -> bool {
    match (m.gadget(), halting_from) {
        (Some(g), Some(from)) => {
            kind == OutcomeKind::Halted && final_state == Control::Halt && from == g.0 as u32 + 1
        }
        _ => false,
    }
}

/// Reference stepper over a dense tape with a 64-bit step counter.
pub fn run_direct(m: &Machine, w: &InputWord, lim: &RunLimits) -> RunOutcome {
    run_direct_with_tape(m, w, lim).0
}

/// As [`run_direct`], also returning the final tape.
pub fn run_direct_with_tape(
    m: &Machine,
    w: &InputWord,
    lim: &RunLimits,
) -> (RunOutcome, DenseTape) {
    let table = Table::new(m);
    let max_steps = lim.max_steps_u64();
    let max_cells = lim.max_cells.max(1) as i64;
    let clock = Clock::new(lim);

    let mut cells: Vec<u8> = w.symbols().to_vec();
    if cells.is_empty() {
        cells.push(0);
    }
    let mut origin: i64 = 0;
    let mut marks: u64 = w.symbols().iter().filter(|&&s| s == 1).count() as u64;
    let (mut lo, mut hi) = (0i64, w.len().saturating_sub(1) as i64);
    let mut head: i64 = 0;
    let mut state: u32 = 0;
    let mut steps: u64 = 0;
    let mut halting_from = None;
    let mut final_state = None;

    let kind = loop {
        if steps >= max_steps {
            break OutcomeKind::StepLimit;
        }
        if steps.is_multiple_of(CLOCK_POLL) && steps > 0 && clock.expired() {
            break OutcomeKind::TimeLimit;
        }
        let idx = head - origin;
        let sym = if idx >= 0 && (idx as usize) < cells.len() {
            cells[idx as usize]
        } else {
            0
        };
        let t = table.get(state, sym);
        if t & DEFINED == 0 {
            steps += 1;
            final_state = Some(Control::State(StateId(state as u16)));
            halting_from = Some(state);
            break OutcomeKind::Halted;
        }
        let write = (t & WRITE != 0) as u8;
        let new_head = if t & RIGHT != 0 { head + 1 } else { head - 1 };
        let halts = t & HALTS != 0;
        if !halts
            && (new_head < lo && hi - new_head + 1 > max_cells
                || new_head > hi && new_head - lo + 1 > max_cells)
        {
            break OutcomeKind::SpaceLimit;
        }
        if write != sym {
            // the head cell is always allocated unless it is blank and stays blank
            if !(idx >= 0 && (idx as usize) < cells.len()) {
                grow(&mut cells, &mut origin, head);
            }
            cells[(head - origin) as usize] = write;
            if write == 1 {
                marks += 1;
            } else {
                marks -= 1;
            }
        }
        head = new_head;
        lo = lo.min(head);
        hi = hi.max(head);
        steps += 1;
        if halts {
            final_state = Some(Control::Halt);
            halting_from = Some(state);
            break OutcomeKind::Halted;
        }
        state = next_of(t);
    };

    let final_state = final_state.unwrap_or(Control::State(StateId(state as u16)));
    let tape = DenseTape::from_raw(cells, origin, lo, hi, marks);
    let outcome = RunOutcome {
        kind,
        steps: BigUint::from(steps),
        marks,
        final_state,
        head,
        halted_via_gadget: gadget_halt(m, kind, halting_from, final_state),
        tape: Some(tape.snapshot(head, lim.snapshot_cells)),
    };
    (outcome, tape)
}

fn grow(cells: &mut Vec<u8>, origin: &mut i64, i: i64) {
    let len = cells.len() as i64;
    if i < *origin {
        let extra = (*origin - i).max(len) as usize;
        let mut grown = vec![0u8; extra + cells.len()];
        grown[extra..].copy_from_slice(cells);
        *cells = grown;
        *origin -= extra as i64;
    } else {
        let needed = (i - *origin + 1) as usize;
        cells.resize(needed.max(cells.len() * 2), 0);
    }
}

/// Step counter used by the accelerated stepper.
pub(crate) trait StepCounter: Clone {
    fn from_limit(limit: &BigUint) -> Option<Self>;
    fn zero() -> Self;
    fn add(&mut self, k: u64);
    /// `limit - self`, saturated to `u64`.
    fn remaining(&self, limit: &Self) -> u64;
    fn into_big(self) -> BigUint;
}

impl StepCounter for u64 {
    fn from_limit(limit: &BigUint) -> Option<Self> {
        limit.to_u64()
    }
    fn zero() -> Self {
        0
    }
    #[inline]
    fn add(&mut self, k: u64) {
        *self += k;
    }
    #[inline]
    fn remaining(&self, limit: &Self) -> u64 {
        limit - self
    }
    fn into_big(self) -> BigUint {
        BigUint::from(self)
    }
}

impl StepCounter for BigUint {
    fn from_limit(limit: &BigUint) -> Option<Self> {
        Some(limit.clone())
    }
    fn zero() -> Self {
        <BigUint as Zero>::zero()
    }
    fn add(&mut self, k: u64) {
        *self += k;
    }
    fn remaining(&self, limit: &Self) -> u64 {
        if self >= limit {
            0
        } else {
            (limit - self).to_u64().unwrap_or(u64::MAX)
        }
    }
    fn into_big(self) -> BigUint {
        self
    }
}

/// Run-length stepper: a self-looping transition crosses a whole uniform
/// run in one move. Steps are counted with arbitrary precision whenever the
/// limit does not fit in 64 bits.
pub fn run_accelerated(m: &Machine, w: &InputWord, lim: &RunLimits) -> RunOutcome {
    match u64::from_limit(&lim.max_steps) {
        Some(_) if lim.max_steps.bits() < 63 => run_accelerated_with::<u64>(m, w, lim).0,
        _ => run_accelerated_with::<BigUint>(m, w, lim).0,
    }
}

/// Returns the outcome and the number of loop iterations used.
pub(crate) fn run_accelerated_with<C: StepCounter>(
    m: &Machine,
    w: &InputWord,
    lim: &RunLimits,
) -> (RunOutcome, u64) {
    let table = Table::new(m);
    let limit = C::from_limit(&lim.max_steps).expect("limit representable");
    let max_cells = lim.max_cells.max(1) as i64;
    let clock = Clock::new(lim);

    let mut tape = RleTape::with_input(w);
    let mut state: u32 = 0;
    let mut steps = C::zero();
    let mut iterations: u64 = 0;
    let mut halting_from = None;
    let mut final_state = None;

    let kind = loop {
        let remaining = steps.remaining(&limit);
        if remaining == 0 {
            break OutcomeKind::StepLimit;
        }
        iterations += 1;
        if iterations.is_multiple_of(CLOCK_POLL) && clock.expired() {
            break OutcomeKind::TimeLimit;
        }
        let sym = tape.under();
        let t = table.get(state, sym);
        if t & DEFINED == 0 {
            steps.add(1);
            final_state = Some(Control::State(StateId(state as u16)));
            halting_from = Some(state);
            break OutcomeKind::Halted;
        }
        let write = (t & WRITE != 0) as u8;
        let dir = if t & RIGHT != 0 { Dir::R } else { Dir::L };
        if t & HALTS != 0 {
            tape.write_under(write);
            tape.move_head(dir);
            steps.add(1);
            final_state = Some(Control::Halt);
            halting_from = Some(state);
            break OutcomeKind::Halted;
        }
        let (lo, hi) = crate::tape::Tape::extent(&tape);
        let head = tape.head();
        // cells the head may still advance in `dir` without exceeding the budget
        let allowance = match dir {
            Dir::R => (lo + max_cells - 1 - head).max(0) as u64,
            Dir::L => (head - (hi - max_cells + 1)).max(0) as u64,
        };
        if next_of(t) == state {
            let run = match tape.run_ahead(dir) {
                RunAhead::Finite(n) => n + 1,
                RunAhead::Infinite => u64::MAX,
            };
            let k = run.min(remaining).min(allowance);
            if k >= 1 {
                tape.sweep(dir, write, k);
                steps.add(k);
                continue;
            }
        }
        if allowance == 0 {
            break OutcomeKind::SpaceLimit;
        }
        tape.write_under(write);
        tape.move_head(dir);
        steps.add(1);
        state = next_of(t);
    };

    let final_state = final_state.unwrap_or(Control::State(StateId(state as u16)));
    let outcome = RunOutcome {
        kind,
        steps: steps.into_big(),
        marks: crate::tape::Tape::marks(&tape),
        final_state,
        head: tape.head(),
        halted_via_gadget: gadget_halt(m, kind, halting_from, final_state),
        tape: Some(tape.snapshot(lim.snapshot_cells)),
    };
    (outcome, iterations)
}

/// Which stepper a caller wants.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stepper {
    Direct,
    Accelerated,
    /// Accelerated, cross-checked against the direct stepper when the step
    /// limit is small.
    #[default]
    Auto,
}

/// Step limit under which [`Stepper::Auto`] cross-checks both steppers.
pub const AUTO_VERIFY_STEPS: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("direct and accelerated steppers disagree: {direct} vs {accelerated}")]
pub struct StepperMismatch {
    pub direct: Box<RunOutcome>,
    pub accelerated: Box<RunOutcome>,
}

pub fn run_with(
    m: &Machine,
    w: &InputWord,
    lim: &RunLimits,
    stepper: Stepper,
) -> Result<RunOutcome, StepperMismatch> {
    match stepper {
        Stepper::Direct => Ok(run_direct(m, w, lim)),
        Stepper::Accelerated => Ok(run_accelerated(m, w, lim)),
        Stepper::Auto => {
            let fast = run_accelerated(m, w, lim);
            if lim.wall_clock.is_none() && lim.max_steps <= BigUint::from(AUTO_VERIFY_STEPS) {
                let slow = run_direct(m, w, lim);
                if slow != fast {
                    return Err(StepperMismatch {
                        direct: Box::new(slow),
                        accelerated: Box::new(fast),
                    });
                }
            }
            Ok(fast)
        }
    }
}

/// The first `k` configurations of the run (fewer if it halts sooner).
pub fn trace(m: &Machine, w: &InputWord, k: usize) -> Vec<Configuration> {
    assert!(k >= 1, "trace length must be at least 1");
    let mut out = Vec::with_capacity(k.min(1 << 16));
    let mut c = Configuration::initial(w);
    out.push(c.clone());
    while out.len() < k {
        match crate::machine::step(m, &c) {
            Some(StepResult::Next(n)) | Some(StepResult::HaltedByZ(n)) => {
                c = n;
                out.push(c.clone());
            }
            Some(StepResult::HaltedByUndefined) | None => break,
        }
    }
    out
}
