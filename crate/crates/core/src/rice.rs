//! Semi-decision procedures for four properties of machines that no
//! algorithm decides in general. Acceptance means halting.
//!
//! Each procedure dovetails over canonical input words (no trailing blank,
//! in length-lexicographic order: `""`, `"1"`, `"01"`, `"11"`, `"001"`, ...)
//! and doubling step budgets. A proved verdict carries witnesses that
//! [`RiceVerdict::replay`] re-checks; everything else is `Unknown`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::deciders::{decide_nonhalting, ReplayError, Verdict};
use crate::machine::{InputWord, Machine};
use crate::simulator::{run_accelerated, run_direct, RunLimits};

const FIRST_ROUND_STEPS: u64 = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RiceBudget {
    /// How many canonical words the last round covers.
    pub words: usize,
    /// Step budget per word in the last round.
    pub max_steps: u64,
}

impl Default for RiceBudget {
    fn default() -> Self {
        RiceBudget {
            words: 64,
            max_steps: 100_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    /// Index of the machine the evidence is about.
    pub machine: usize,
    pub input: InputWord,
    /// `Halts` or `NeverHalts`.
    pub evidence: Verdict,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum RiceVerdict {
    ProvedYes {
        witnesses: Vec<Witness>,
    },
    ProvedNo {
        witnesses: Vec<Witness>,
    },
    Unknown {
        budget: RiceBudget,
        #[serde(skip_serializing_if = "Option::is_none", default)]
        note: Option<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RiceReplayError {
    #[error("witness names machine {0}, which was not supplied")]
    NoSuchMachine(usize),
    #[error("witness on {input:?} does not halt as claimed")]
    Halting { input: String },
    #[error("witness on {input:?}: {source}")]
    Certificate { input: String, source: ReplayError },
    #[error("witness evidence is unknown")]
    Unknown,
}

impl RiceVerdict {
    pub fn is_proved(&self) -> bool {
        !matches!(self, RiceVerdict::Unknown { .. })
    }

    pub fn witnesses(&self) -> &[Witness] {
        match self {
            RiceVerdict::ProvedYes { witnesses } | RiceVerdict::ProvedNo { witnesses } => witnesses,
            RiceVerdict::Unknown { .. } => &[],
        }
    }

    /// Re-checks every witness against `machines` by plain simulation or
    /// certificate replay.
    pub fn replay(&self, machines: &[&Machine]) -> Result<(), RiceReplayError> {
        for w in self.witnesses() {
            let m = machines
                .get(w.machine)
                .ok_or(RiceReplayError::NoSuchMachine(w.machine))?;
            match &w.evidence {
                Verdict::Halts { steps, marks } => {
                    let run = run_direct(m, &w.input, &RunLimits::steps((*steps).max(1)));
                    if !run.halted() || run.steps_u64() != Some(*steps) || run.marks != *marks {
                        return Err(RiceReplayError::Halting {
                            input: w.input.to_string(),
                        });
                    }
                }
                Verdict::NeverHalts { certificate } => {
                    certificate.replay(m, &w.input).map_err(|source| {
                        RiceReplayError::Certificate {
                            input: w.input.to_string(),
                            source,
                        }
                    })?
                }
                Verdict::Unknown { .. } => return Err(RiceReplayError::Unknown),
            }
        }
        Ok(())
    }
}

impl fmt::Display for RiceVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (label, witnesses) = match self {
            RiceVerdict::ProvedYes { witnesses } => ("proved yes", witnesses),
            RiceVerdict::ProvedNo { witnesses } => ("proved no", witnesses),
            RiceVerdict::Unknown { budget, note } => {
                write!(
                    f,
                    "unknown after {} words at up to {} steps",
                    budget.words, budget.max_steps
                )?;
                if let Some(n) = note {
                    write!(f, " ({n})")?;
                }
                return Ok(());
            }
        };
        f.write_str(label)?;
        for w in witnesses {
            write!(
                f,
                "; machine {} on {:?}: {}",
                w.machine,
                w.input.to_string(),
                w.evidence
            )?;
        }
        Ok(())
    }
}

/// What is known about one machine on one word.
#[derive(Clone, Debug, Default)]
struct Cell {
    evidence: Option<Verdict>,
    deciders_at: Option<u64>,
}

/// Dovetails one or more machines over canonical words.
struct Dovetail<'a> {
    machines: &'a [&'a Machine],
    budget: RiceBudget,
    words: Vec<InputWord>,
    cells: Vec<Vec<Cell>>,
}

fn canonical_words(n: usize) -> Vec<InputWord> {
    (0u64..)
        .map(InputWord::nth_length_lex)
        .filter(InputWord::is_canonical)
        .take(n)
        .collect()
}

impl<'a> Dovetail<'a> {
    fn new(machines: &'a [&'a Machine], budget: RiceBudget) -> Self {
        let words = canonical_words(budget.words);
        let cells = machines
            .iter()
            .map(|_| vec![Cell::default(); words.len()])
            .collect();
        Dovetail {
            machines,
            budget,
            words,
            cells,
        }
    }

    /// Runs rounds until `done` returns a verdict or the budget is spent.
    /// `done` sees how many words the round covered.
    fn run(
        &mut self,
        mut done: impl FnMut(&Self, usize) -> Option<RiceVerdict>,
    ) -> Option<RiceVerdict> {
        let mut steps = FIRST_ROUND_STEPS.min(self.budget.max_steps).max(1);
        let mut words = 1.min(self.words.len());
        loop {
            let last = steps == self.budget.max_steps && words == self.words.len();
            for k in 0..self.machines.len() {
                for i in 0..words {
                    self.advance(k, i, steps, last);
                }
            }
            if let Some(v) = done(self, words) {
                return Some(v);
            }
            if last {
                return None;
            }
            steps = steps.saturating_mul(2).min(self.budget.max_steps);
            words = (words * 2).min(self.words.len());
        }
    }

    fn advance(&mut self, k: usize, i: usize, steps: u64, last: bool) {
        let m = self.machines[k];
        let w = &self.words[i];
        let cell = &mut self.cells[k][i];
        if cell.evidence.is_some() {
            return;
        }
        let lim = RunLimits::steps(steps).with_snapshot_cells(0);
        let run = run_accelerated(m, w, &lim);
        if run.halted() {
            cell.evidence = Some(Verdict::Halts {
                steps: run.steps_u64().expect("within a u64 budget"),
                marks: run.marks,
            });
            return;
        }
        // Deciders on first sight of the word and once more at full budget.
        if cell.deciders_at.is_none() || last && cell.deciders_at != Some(steps) {
            cell.deciders_at = Some(steps);
            if let v @ Verdict::NeverHalts { .. } = decide_nonhalting(m, w, &lim) {
                cell.evidence = Some(v);
            }
        }
    }

    fn witness(&self, k: usize, i: usize) -> Option<Witness> {
        self.cells[k][i].evidence.clone().map(|evidence| Witness {
            machine: k,
            input: self.words[i].clone(),
            evidence,
        })
    }

    fn halts(&self, k: usize, i: usize) -> bool {
        matches!(self.cells[k][i].evidence, Some(Verdict::Halts { .. }))
    }

    fn never_halts(&self, k: usize, i: usize) -> bool {
        matches!(self.cells[k][i].evidence, Some(Verdict::NeverHalts { .. }))
    }

    fn unknown(&self, note: Option<String>) -> RiceVerdict {
        RiceVerdict::Unknown {
            budget: self.budget,
            note,
        }
    }
}

/// "Does `m` accept any string at all?" Proves yes with a halting word;
/// never proves no.
pub fn semi_decide_emptiness(m: &Machine, budget: RiceBudget) -> RiceVerdict {
    let machines = [m];
    let mut d = Dovetail::new(&machines, budget);
    d.run(|d, words| {
        (0..words)
            .find(|&i| d.halts(0, i))
            .map(|i| RiceVerdict::ProvedYes {
                witnesses: vec![d.witness(0, i).unwrap()],
            })
    })
    .unwrap_or_else(|| d.unknown(None))
}

/// "Does `m` reject any string?" Proves yes with a word on which `m`
/// certainly never halts; never proves no.
pub fn semi_decide_all_strings(m: &Machine, budget: RiceBudget) -> RiceVerdict {
    let machines = [m];
    let mut d = Dovetail::new(&machines, budget);
    d.run(|d, words| {
        (0..words)
            .find(|&i| d.never_halts(0, i))
            .map(|i| RiceVerdict::ProvedYes {
                witnesses: vec![d.witness(0, i).unwrap()],
            })
    })
    .unwrap_or_else(|| d.unknown(None))
}

/// "Does `m` accept exactly one input?" Proves no with two halting words;
/// never proves yes.
pub fn semi_decide_password(m: &Machine, budget: RiceBudget) -> RiceVerdict {
    let machines = [m];
    let mut d = Dovetail::new(&machines, budget);
    let found = d.run(|d, words| {
        let halting: Vec<usize> = (0..words).filter(|&i| d.halts(0, i)).take(2).collect();
        (halting.len() == 2).then(|| RiceVerdict::ProvedNo {
            witnesses: halting.iter().map(|&i| d.witness(0, i).unwrap()).collect(),
        })
    });
    found.unwrap_or_else(|| {
        let note = (0..d.words.len())
            .find(|&i| d.halts(0, i))
            .map(|i| format!("one halting word found: {:?}", d.words[i].to_string()));
        d.unknown(note)
    })
}

/// "Do `m1` and `m2` halt on exactly the same inputs?" Proves no with a word
/// on which one halts and the other certainly does not; never proves yes.
pub fn semi_decide_equivalence(m1: &Machine, m2: &Machine, budget: RiceBudget) -> RiceVerdict {
    let machines = [m1, m2];
    let mut d = Dovetail::new(&machines, budget);
    let differs = |d: &Dovetail, i: usize| {
        (d.halts(0, i) && d.never_halts(1, i)) || (d.never_halts(0, i) && d.halts(1, i))
    };
    let found = d.run(|d, words| {
        (0..words)
            .find(|&i| differs(d, i))
            .map(|i| RiceVerdict::ProvedNo {
                witnesses: vec![d.witness(0, i).unwrap(), d.witness(1, i).unwrap()],
            })
    });
    found.unwrap_or_else(|| {
        let asymmetric = (0..d.words.len()).find(|&i| d.halts(0, i) != d.halts(1, i));
        let note = match asymmetric {
            Some(i) => format!(
                "machine {} halts on {:?}; the other is undecided",
                if d.halts(0, i) { 0 } else { 1 },
                d.words[i].to_string()
            ),
            None => "no difference found within budget".to_string(),
        };
        d.unknown(Some(note))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deciders::Certificate;
    use crate::format::parse;
    use crate::format::tests::machine_strategy;
    use proptest::prelude::*;

    fn small() -> RiceBudget {
        RiceBudget {
            words: 16,
            max_steps: 2_000,
        }
    }

    fn word(s: &str) -> InputWord {
        s.parse().unwrap()
    }

    const IMMEDIATE: &str = "1RZ1RZ";
    const RIGHT_FOREVER: &str = "1RA1RA";
    const HALT_ON_ONE: &str = "0RA1RZ";

    #[test]
    fn canonical_word_order() {
        let words: Vec<String> = canonical_words(6).iter().map(|w| w.to_string()).collect();
        assert_eq!(words, ["", "1", "01", "11", "001", "011"]);
    }

    #[test]
    fn emptiness_examples() {
        let m = parse(IMMEDIATE).unwrap();
        let v = semi_decide_emptiness(&m, small());
        assert_eq!(
            v,
            RiceVerdict::ProvedYes {
                witnesses: vec![Witness {
                    machine: 0,
                    input: InputWord::empty(),
                    evidence: Verdict::Halts { steps: 1, marks: 1 }
                }]
            }
        );
        v.replay(&[&m]).unwrap();

        let right = parse(RIGHT_FOREVER).unwrap();
        assert!(!semi_decide_emptiness(&right, small()).is_proved());

        let m = parse(HALT_ON_ONE).unwrap();
        let v = semi_decide_emptiness(&m, small());
        assert_eq!(v.witnesses()[0].input, word("1"));
    }

    #[test]
    fn all_strings_examples() {
        let right = parse(RIGHT_FOREVER).unwrap();
        let v = semi_decide_all_strings(&right, small());
        let w = &v.witnesses()[0];
        assert_eq!(w.input, InputWord::empty());
        assert!(matches!(
            w.evidence,
            Verdict::NeverHalts {
                certificate: Certificate::TranslatedCycle { .. }
            }
        ));
        v.replay(&[&right]).unwrap();

        let bouncer = parse("0RB---_0LA---").unwrap();
        let v = semi_decide_all_strings(&bouncer, small());
        assert!(matches!(
            v.witnesses()[0].evidence,
            Verdict::NeverHalts {
                certificate: Certificate::ExactCycle { .. }
            }
        ));

        let m = parse(IMMEDIATE).unwrap();
        assert!(!semi_decide_all_strings(&m, small()).is_proved());
    }

    #[test]
    fn password_examples() {
        let m = parse(IMMEDIATE).unwrap();
        let v = semi_decide_password(&m, small());
        let inputs: Vec<_> = v.witnesses().iter().map(|w| w.input.clone()).collect();
        assert!(matches!(v, RiceVerdict::ProvedNo { .. }));
        assert_eq!(inputs, [InputWord::empty(), word("1")]);
        v.replay(&[&m]).unwrap();

        // Halts iff the word starts 1000, so "1" is the only canonical
        // halting word shorter than five.
        let one = parse("0RE1RB_0RC0RE_0RD0RE_0RZ0RE_0RE0RE").unwrap();
        let v = semi_decide_password(&one, small());
        assert_eq!(
            v,
            RiceVerdict::Unknown {
                budget: small(),
                note: Some(r#"one halting word found: "1""#.to_string())
            }
        );

        assert!(!semi_decide_password(&parse(RIGHT_FOREVER).unwrap(), small()).is_proved());
    }

    #[test]
    fn equivalence_examples() {
        let halter = parse(IMMEDIATE).unwrap();
        let right = parse(RIGHT_FOREVER).unwrap();
        let v = semi_decide_equivalence(&halter, &right, small());
        assert!(matches!(v, RiceVerdict::ProvedNo { .. }));
        assert_eq!(v.witnesses()[0].input, InputWord::empty());
        v.replay(&[&halter, &right]).unwrap();

        assert!(!semi_decide_equivalence(&halter, &halter, small()).is_proved());
        let other = parse("0LZ0LZ").unwrap();
        assert_eq!(
            semi_decide_equivalence(&halter, &other, small()),
            RiceVerdict::Unknown {
                budget: small(),
                note: Some("no difference found within budget".to_string())
            }
        );
    }

    #[test]
    fn tampered_witness_fails_replay() {
        let m = parse(IMMEDIATE).unwrap();
        let v = RiceVerdict::ProvedYes {
            witnesses: vec![Witness {
                machine: 0,
                input: InputWord::empty(),
                evidence: Verdict::Halts { steps: 2, marks: 1 },
            }],
        };
        assert!(v.replay(&[&m]).is_err());
        let v = RiceVerdict::ProvedYes {
            witnesses: vec![Witness {
                machine: 1,
                input: InputWord::empty(),
                evidence: Verdict::Halts { steps: 1, marks: 1 },
            }],
        };
        assert_eq!(v.replay(&[&m]), Err(RiceReplayError::NoSuchMachine(1)));
    }

    #[test]
    fn serialization_shape() {
        let v = RiceVerdict::Unknown {
            budget: small(),
            note: None,
        };
        assert_eq!(
            serde_json::to_string(&v).unwrap(),
            r#"{"verdict":"unknown","budget":{"words":16,"max_steps":2000}}"#
        );
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn proofs_only_in_the_provable_direction(m in machine_strategy(3), n in machine_strategy(3)) {
            let b = RiceBudget { words: 8, max_steps: 500 };
            let e = semi_decide_emptiness(&m, b);
            prop_assert!(!matches!(e, RiceVerdict::ProvedNo { .. }), "{}", e);
            e.replay(&[&m]).unwrap();
            let a = semi_decide_all_strings(&m, b);
            prop_assert!(!matches!(a, RiceVerdict::ProvedNo { .. }), "{}", a);
            a.replay(&[&m]).unwrap();
            let p = semi_decide_password(&m, b);
            prop_assert!(!matches!(p, RiceVerdict::ProvedYes { .. }), "{}", p);
            p.replay(&[&m]).unwrap();
            let q = semi_decide_equivalence(&m, &n, b);
            prop_assert!(!matches!(q, RiceVerdict::ProvedYes { .. }), "{}", q);
            q.replay(&[&m, &n]).unwrap();
        }
    }
}
