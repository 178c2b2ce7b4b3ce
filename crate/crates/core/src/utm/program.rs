//! The UTM as a program over a 16-symbol alphabet.

use std::collections::HashMap;

use crate::machine::Dir;

/// Macro tape symbols. Blank is `Z0`, encoded as `0000`.
pub mod sym {
    /// Simulated or counter cell holding 0; also the blank.
    pub const Z0: u8 = 0;
    /// Simulated or counter cell holding 1.
    pub const ONE: u8 = 1;
    /// Simulated head over a 0.
    pub const H0: u8 = 2;
    /// Simulated head over a 1.
    pub const H1: u8 = 3;
    /// Left boundary, simulated head on the right side.
    pub const LB_R: u8 = 4;
    /// Left boundary, simulated head on the left side.
    pub const LB_L: u8 = 5;
    /// Right boundary of the program region.
    pub const RB: u8 = 6;
    /// Block marker.
    pub const S: u8 = 7;
    /// Block marker of the current state.
    pub const SC: u8 = 8;
    /// Block pointer while looking up a target; after a halt, the block of
    /// the state that took the `Z` transition.
    pub const SP: u8 = 9;
    /// Entry marker.
    pub const E: u8 = 10;
    /// Entry being executed.
    pub const EA: u8 = 11;
    /// One unit of a target state number.
    pub const U: u8 = 12;
    /// A counted unit.
    pub const UC: u8 = 13;
    /// Target is the halt state.
    pub const HZ: u8 = 14;
    /// Undefined entry.
    pub const UD: u8 = 15;

    pub const COUNT: usize = 16;
}

use sym::*;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MacroTransition {
    pub write: u8,
    pub dir: Dir,
    /// `None` halts.
    pub next: Option<usize>,
}

#[derive(Clone, Debug)]
pub struct MacroProgram {
    pub names: Vec<String>,
    pub rows: Vec<[Option<MacroTransition>; COUNT]>,
}

enum Next<'a> {
    To(&'a str),
    Halt,
}

#[derive(Default)]
struct Builder {
    ids: HashMap<String, usize>,
    names: Vec<String>,
    rows: Vec<[Option<MacroTransition>; COUNT]>,
}

impl Builder {
    fn id(&mut self, name: &str) -> usize {
        if let Some(&i) = self.ids.get(name) {
            return i;
        }
        let i = self.names.len();
        self.ids.insert(name.to_string(), i);
        self.names.push(name.to_string());
        self.rows.push([None; COUNT]);
        i
    }

    fn on(&mut self, state: &str, read: u8, write: u8, dir: Dir, next: Next) {
        let s = self.id(state);
        let next = match next {
            Next::To(n) => Some(self.id(n)),
            Next::Halt => None,
        };
        let slot = &mut self.rows[s][read as usize];
        assert!(slot.is_none(), "{state} already handles symbol {read}");
        *slot = Some(MacroTransition { write, dir, next });
    }

    /// Leaves `read` unchanged.
    fn pass(&mut self, state: &str, read: u8, dir: Dir, next: &str) {
        self.on(state, read, read, dir, Next::To(next));
    }

    fn pass_all(&mut self, state: &str, reads: &[u8], dir: Dir, next: &str) {
        for &r in reads {
            self.pass(state, r, dir, next);
        }
    }

    /// Every symbol without a rule is kept and the head moves on.
    fn scan(&mut self, state: &str, dir: Dir) {
        let s = self.id(state);
        for r in 0..COUNT {
            if self.rows[s][r].is_none() {
                self.rows[s][r] = Some(MacroTransition {
                    write: r as u8,
                    dir,
                    next: Some(s),
                });
            }
        }
    }

    /// At the left boundary: start the next simulated step.
    fn begin_step(&mut self, state: &str) {
        self.pass(state, LB_R, Dir::R, "find-head-r");
        self.pass(state, LB_L, Dir::L, "find-head-l");
    }

    /// Adds one to the step counter, which sits just right of the left
    /// boundary, most significant cell first. Then either starts the next
    /// simulated step or halts.
    fn increment(&mut self, prefix: &str, next_step: bool) {
        let lb = format!("{prefix}-lb");
        let seek = format!("{prefix}-seek");
        let add = format!("{prefix}-add");
        let back = format!("{prefix}-back");
        self.pass_all(&lb, &[LB_R, LB_L], Dir::R, &seek);
        self.scan(&lb, Dir::L);
        self.pass_all(&seek, &[S, SC, SP], Dir::L, &add);
        self.scan(&seek, Dir::R);
        self.on(&add, ONE, Z0, Dir::L, Next::To(&add));
        if next_step {
            self.on(&add, Z0, ONE, Dir::L, Next::To(&back));
            // Wraps around at 2^width.
            self.begin_step(&add);
            self.begin_step(&back);
            self.scan(&back, Dir::L);
        } else {
            self.on(&add, Z0, ONE, Dir::L, Next::Halt);
            self.on(&add, LB_R, LB_R, Dir::R, Next::Halt);
            self.on(&add, LB_L, LB_L, Dir::R, Next::Halt);
        }
    }
}

fn bit(b: u8) -> u8 {
    if b == 1 {
        ONE
    } else {
        Z0
    }
}

/// One macro state name per phase; `w` and `d` are the entry's write and
/// direction bits carried in the state.
pub fn build() -> MacroProgram {
    use Dir::{L, R};
    let mut p = Builder::default();
    let _ = p.id("start");
    p.begin_step("start");

    // Find the simulated head and read its symbol.
    p.pass("find-head-r", H0, L, "to-current-l0");
    p.pass("find-head-r", H1, L, "to-current-l1");
    p.scan("find-head-r", R);
    p.pass("find-head-l", H0, R, "to-current-r0");
    p.pass("find-head-l", H1, R, "to-current-r1");
    p.scan("find-head-l", L);

    // Go to the current block and mark the entry for the symbol read.
    for b in 0..2 {
        for (side, dir) in [("l", L), ("r", R)] {
            let st = format!("to-current-{side}{b}");
            p.pass(&st, SC, R, &format!("pick{b}"));
            p.scan(&st, dir);
        }
    }
    p.on("pick0", E, EA, R, Next::To("read-write"));
    p.pass("pick1", E, R, "skip-entry");
    p.on("skip-entry", E, EA, R, Next::To("read-write"));
    p.scan("skip-entry", R);

    // Read the entry: write bit, direction bit, then the target kind.
    for w in 0..2u8 {
        p.pass("read-write", bit(w), R, &format!("read-dir{w}"));
        for d in 0..2u8 {
            p.pass(
                &format!("read-dir{w}"),
                bit(d),
                R,
                &format!("read-target{w}{d}"),
            );
            let kind = format!("read-target{w}{d}");
            p.pass(&kind, UD, L, "undefined");
            // Anything else (halt or a state) writes and moves first.
            let exec = format!("exec{w}{d}");
            for r in (0..COUNT as u8).filter(|&r| r != UD) {
                p.pass(&kind, r, L, &exec);
            }

            // Execute on the simulated tape.
            let dir = if d == 1 { R } else { L };
            let xr = format!("exec-r{w}{d}");
            let xl = format!("exec-l{w}{d}");
            p.pass(&exec, LB_R, R, &xr);
            p.pass(&exec, LB_L, L, &xl);
            p.scan(&exec, L);
            for (st, land, scan) in [(&xr, "land-r", R), (&xl, "land-l", L)] {
                p.on(st, H0, bit(w), dir, Next::To(land));
                p.on(st, H1, bit(w), dir, Next::To(land));
                p.scan(st, scan);
            }
        }
    }

    // Mark the landing cell, crossing the program region when needed.
    p.on("land-r", Z0, H0, L, Next::To("return-l"));
    p.on("land-r", ONE, H1, L, Next::To("return-l"));
    p.pass("land-r", RB, L, "cross-l");
    p.on("cross-l", LB_R, LB_L, L, Next::To("mark-then-return-r"));
    p.scan("cross-l", L);
    p.on("mark-then-return-r", Z0, H0, R, Next::To("return-r"));
    p.on("mark-then-return-r", ONE, H1, R, Next::To("return-r"));

    p.on("land-l", Z0, H0, R, Next::To("return-r"));
    p.on("land-l", ONE, H1, R, Next::To("return-r"));
    p.on("land-l", LB_L, LB_R, R, Next::To("cross-r"));
    p.pass("cross-r", RB, R, "mark-then-return-l");
    p.scan("cross-r", R);
    p.on("mark-then-return-l", Z0, H0, L, Next::To("return-l"));
    p.on("mark-then-return-l", ONE, H1, L, Next::To("return-l"));

    // Back to the active entry and on to its target.
    p.pass("return-l", EA, R, "after-write");
    p.scan("return-l", L);
    p.pass("return-r", EA, R, "after-write");
    p.scan("return-r", R);
    p.pass_all("after-write", &[Z0, ONE], R, "after-dir");
    p.pass_all("after-dir", &[Z0, ONE], R, "target");
    p.pass("target", HZ, L, "halt-entry");
    for r in (0..COUNT as u8).filter(|&r| r != HZ) {
        p.pass("target", r, L, "clear-current");
    }

    // New state: clear the current marker, point at block 0, then move the
    // pointer one block per unit of the target.
    p.on("clear-current", SC, S, L, Next::To("pointer-lb"));
    p.scan("clear-current", L);
    p.pass_all("pointer-lb", &[LB_R, LB_L], R, "pointer-place");
    p.scan("pointer-lb", L);
    p.on("pointer-place", S, SP, R, Next::To("seek-entry"));
    p.scan("pointer-place", R);
    p.pass("seek-entry", EA, R, "count");
    p.scan("seek-entry", R);
    p.pass_all("count", &[Z0, ONE, UC], R, "count");
    p.on("count", U, UC, L, Next::To("advance-lb"));
    p.pass_all("count", &[E, S, SP, RB], L, "restore-lb");
    p.pass_all("advance-lb", &[LB_R, LB_L], R, "advance-find");
    p.scan("advance-lb", L);
    p.on("advance-find", SP, S, R, Next::To("advance-next"));
    p.scan("advance-find", R);
    p.on("advance-next", S, SP, L, Next::To("entry-lb"));
    p.scan("advance-next", R);
    p.pass_all("entry-lb", &[LB_R, LB_L], R, "seek-entry");
    p.scan("entry-lb", L);

    // Restore markers left to right, then count the step.
    p.pass_all("restore-lb", &[LB_R, LB_L], R, "restore");
    p.scan("restore-lb", L);
    p.on("restore", UC, U, R, Next::To("restore"));
    p.on("restore", EA, E, R, Next::To("restore"));
    p.on("restore", SP, SC, R, Next::To("restore"));
    p.pass("restore", RB, L, "step-lb");
    p.scan("restore", R);
    p.increment("step", true);

    // Halt: the current block becomes the pointer block, then count and stop.
    p.on("halt-entry", EA, E, L, Next::To("halt-current"));
    p.scan("halt-entry", L);
    p.on("halt-current", SC, SP, L, Next::To("final-lb"));
    p.scan("halt-current", L);
    // Undefined entry: keep the current marker, count and stop.
    p.on("undefined", EA, E, L, Next::To("final-lb"));
    p.scan("undefined", L);
    p.increment("final", false);

    MacroProgram {
        names: p.names,
        rows: p.rows,
    }
}

/// Result of running the macro program directly.
#[derive(Clone, Debug)]
pub struct MacroRun {
    pub halted: bool,
    pub steps: u64,
    /// Macro cells from `origin`.
    pub cells: Vec<u8>,
    pub origin: i64,
}

impl MacroProgram {
    /// Runs on `cells` placed from macro cell 0, head on cell 0.
    pub fn run(&self, cells: &[u8], max_steps: u64) -> MacroRun {
        let mut tape: HashMap<i64, u8> = cells
            .iter()
            .enumerate()
            .map(|(i, &s)| (i as i64, s))
            .collect();
        let mut head = 0i64;
        let mut state = 0usize;
        let mut steps = 0u64;
        let mut halted = false;
        while steps < max_steps {
            let read = tape.get(&head).copied().unwrap_or(Z0);
            let Some(t) = self.rows[state][read as usize] else {
                panic!(
                    "macro state {} has no rule for symbol {read}",
                    self.names[state]
                );
            };
            tape.insert(head, t.write);
            head += t.dir.delta();
            steps += 1;
            match t.next {
                Some(n) => state = n,
                None => {
                    halted = true;
                    break;
                }
            }
        }
        let lo = tape.keys().copied().min().unwrap_or(0);
        let hi = tape.keys().copied().max().unwrap_or(0);
        let cells = (lo..=hi)
            .map(|i| tape.get(&i).copied().unwrap_or(Z0))
            .collect();
        MacroRun {
            halted,
            steps,
            cells,
            origin: lo,
        }
    }
}
