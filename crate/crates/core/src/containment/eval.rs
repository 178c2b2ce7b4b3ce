//! Scoring oracles against ground-truth labels.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::oracle::{AnswerKind, HarmOracle, OracleAnswer};
use super::{harm_of, make_halt_harm, ContainedProgram, HarmLabel};
use crate::corpus;
use crate::machine::InputWord;
use crate::simulator::RunLimits;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabeledProgram {
    pub name: String,
    pub program: ContainedProgram,
    pub truth: HarmLabel,
}

/// Labels each program with [`harm_of`] under `lim`, in parallel, keeping
/// the given order.
pub fn label_corpus(
    programs: Vec<(String, ContainedProgram)>,
    lim: &RunLimits,
) -> Vec<LabeledProgram> {
    programs
        .into_par_iter()
        .map(|(name, program)| {
            let truth = harm_of(&program, lim);
            LabeledProgram {
                name,
                program,
                truth,
            }
        })
        .collect()
}

/// The bundled champions, test machines and holdouts compiled with
/// [`make_halt_harm`] on the empty word, plus two raw programs.
pub fn bundled_programs() -> Vec<(String, ContainedProgram)> {
    let empty = InputWord::empty();
    let mut out: Vec<(String, ContainedProgram)> = corpus::all_bundled()
        .into_iter()
        .map(|e| {
            let p = make_halt_harm(&e.machine, &empty).expect("bundled machines are small");
            (format!("halt-harm({})", e.name), p)
        })
        .collect();
    for e in corpus::test_machines() {
        out.push((
            format!("raw({})", e.name),
            ContainedProgram::raw(e.machine, empty.clone()),
        ));
    }
    out
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tallies {
    pub correct_harmful: u64,
    pub correct_safe: u64,
    pub false_harmful: u64,
    pub false_safe: u64,
    pub unknown_on_harmful: u64,
    pub unknown_on_safe: u64,
    pub unknown_on_unknown: u64,
    pub harmful_on_unknown: u64,
    pub safe_on_unknown: u64,
}

impl Tallies {
    fn add(&mut self, answer: AnswerKind, truth: AnswerKind) {
        use AnswerKind::*;
        let slot = match (answer, truth) {
            (Harmful, Harmful) => &mut self.correct_harmful,
            (Safe, Safe) => &mut self.correct_safe,
            (Harmful, Safe) => &mut self.false_harmful,
            (Safe, Harmful) => &mut self.false_safe,
            (Unknown, Harmful) => &mut self.unknown_on_harmful,
            (Unknown, Safe) => &mut self.unknown_on_safe,
            (Unknown, Unknown) => &mut self.unknown_on_unknown,
            (Harmful, Unknown) => &mut self.harmful_on_unknown,
            (Safe, Unknown) => &mut self.safe_on_unknown,
        };
        *slot += 1;
    }

    pub fn total(&self) -> u64 {
        self.correct_harmful
            + self.correct_safe
            + self.errors()
            + self.unknowns()
            + self.harmful_on_unknown
            + self.safe_on_unknown
    }

    /// Definite answers contradicting a definite label.
    pub fn errors(&self) -> u64 {
        self.false_harmful + self.false_safe
    }

    pub fn unknowns(&self) -> u64 {
        self.unknown_on_harmful + self.unknown_on_safe + self.unknown_on_unknown
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreItem {
    pub name: String,
    pub truth: AnswerKind,
    pub answer: OracleAnswer,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub oracle_error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scorecard {
    pub oracle: String,
    pub total_oracle: bool,
    pub tallies: Tallies,
    pub items: Vec<ScoreItem>,
}

/// Asks `oracle` about every program, in parallel. Oracle failures count as
/// Unknown. Items keep corpus order.
pub fn evaluate_oracle(oracle: &dyn HarmOracle, corpus: &[LabeledProgram]) -> Scorecard {
    let items: Vec<ScoreItem> = corpus
        .par_iter()
        .map(|l| {
            let (answer, oracle_error) = match oracle.judge(&l.program, &l.program.input) {
                Ok(a) => (a, None),
                Err(e) => (OracleAnswer::unknown(), Some(e.to_string())),
            };
            ScoreItem {
                name: l.name.clone(),
                truth: l.truth.kind(),
                answer,
                oracle_error,
            }
        })
        .collect();
    let mut tallies = Tallies::default();
    for item in &items {
        tallies.add(item.answer.kind, item.truth);
    }
    Scorecard {
        oracle: oracle.name(),
        total_oracle: oracle.is_total(),
        tallies,
        items,
    }
}
