//! A Turing-machine laboratory: fast simulation of two-symbol machines,
//! busy-beaver verification, certificate-producing halting deciders, a
//! universal machine, and an executable halting-to-harm reduction with
//! oracle evaluation.

pub mod containment;
pub mod corpus;
pub mod deciders;
pub mod format;
pub mod machine;
pub mod record;
pub mod rice;
pub mod simulator;
pub mod store;
pub mod tape;
pub mod utm;

pub use format::{parse, serialize, FormatError};
pub use machine::{
    initial_configuration, step, Configuration, Control, Dir, InputWord, Machine, StateId,
    StepResult, Symbol, Transition,
};
pub use simulator::{
    run_accelerated, run_direct, trace, OutcomeKind, RunLimits, RunOutcome, Stepper,
};
pub use tape::{DenseTape, RleTape, Run, Tape, TapeSnapshot};

pub use containment::{
    control_gate, evaluate_oracle, harm_of, make_halt_harm, ContainedProgram, GateDecision,
    HarmLabel, HarmOracle, OracleAnswer, Policy, Scorecard,
};
pub use deciders::{
    busy_beaver_threshold, decide, enumerate, Certificate, EnumerationReport, ThresholdAnswer,
    Verdict,
};
pub use rice::{RiceBudget, RiceVerdict};
pub use store::{Filter, RecordKind, ResultRecord, Store};
pub use utm::{encode, run_via_utm, universal_machine, UtmEncoding};
