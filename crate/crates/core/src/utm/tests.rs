use proptest::prelude::*;

use super::*;
use crate::deciders::enumerate_machines;
use crate::format::parse;
use crate::format::tests::machine_strategy;
use crate::simulator::run_direct;

fn word(s: &str) -> InputWord {
    s.parse().unwrap()
}

fn expected(m: &Machine, w: &InputWord) -> RunOutcome {
    let mut out = run_direct(m, w, &RunLimits::steps(10_000).with_snapshot_cells(0));
    out.tape = None;
    out
}

fn via_utm(m: &Machine, w: &InputWord) -> UtmRun {
    run_via_utm(&encode(m, w).unwrap(), &RunLimits::steps(50_000_000))
}

/// Non-halting runs only need enough budget to show the universal machine
/// is still going.
fn via_utm_short(m: &Machine, w: &InputWord) -> UtmRun {
    run_via_utm(&encode(m, w).unwrap(), &RunLimits::steps(500_000))
}

#[test]
fn universal_machine_shape() {
    let u = universal_machine();
    assert!(u.n_states() > 25);
    assert_eq!(u.gadget(), None);
    println!(
        "universal machine: {} states, {} defined entries",
        u.n_states(),
        u.defined_count()
    );
}

#[test]
fn halter_recovers_one_step_one_mark() {
    let m = parse("1RZ---").unwrap();
    let run = via_utm(&m, &InputWord::empty());
    assert!(run.utm.halted());
    let sim = run.simulated.unwrap();
    assert_eq!(sim.steps, BigUint::from(1u8));
    assert_eq!(sim.marks, 1);
    assert_eq!(sim.head, 1);
    assert_eq!(sim.final_state, Control::Halt);
}

#[test]
fn bouncer_does_not_halt() {
    let m = parse("0RB---_0LA---").unwrap();
    let run = run_via_utm(
        &encode(&m, &InputWord::empty()).unwrap(),
        &RunLimits::steps(1_000_000),
    );
    assert_eq!(run.utm.kind, OutcomeKind::StepLimit);
    assert!(run.simulated.is_none());
}

#[test]
fn macro_program_matches_on_small_halters() {
    for text in ["1RZ---", "1RB1LB_1LA1RZ", "1RB---_1LA0LA"] {
        let m = parse(text).unwrap();
        let run = run_macro(&m, &InputWord::empty(), 1_000_000);
        assert!(run.halted, "{text}");
    }
}

#[test]
fn undefined_entry_keeps_state() {
    let m = parse("1RB---_---0LA").unwrap();
    let w = InputWord::empty();
    let sim = via_utm(&m, &w).simulated.unwrap();
    assert_eq!(sim, expected(&m, &w));
    assert_eq!(sim.final_state, Control::State(StateId(1)));
}

#[test]
fn two_state_machines_agree_on_several_inputs() {
    let inputs = ["", "0", "1", "11", "101", "0110"].map(word);
    for c in enumerate_machines(2, 1000).unwrap() {
        let m = parse(&c.text).unwrap();
        for w in &inputs {
            let want = expected(&m, w);
            if want.halted() {
                assert_eq!(via_utm(&m, w).simulated, Some(want), "{m} on {w}");
            } else {
                assert!(!via_utm_short(&m, w).utm.halted(), "{m} on {w}");
            }
        }
    }
}

#[test]
fn small_champions() {
    for text in [
        "1RB1LB_1LA1RZ",
        "1RB1RZ_0RC1RB_1LC1LA",
        "1RB1RZ_1LB0RC_1LC1LA",
    ] {
        let m = parse(text).unwrap();
        let want = expected(&m, &InputWord::empty());
        assert!(want.halted(), "{text}");
        assert_eq!(
            via_utm(&m, &InputWord::empty()).simulated,
            Some(want),
            "{text}"
        );
    }
}

#[test]
fn distinct_machines_distinct_words() {
    let a = encode(&parse("1RZ---").unwrap(), &InputWord::empty()).unwrap();
    let b = encode(&parse("0RZ---").unwrap(), &InputWord::empty()).unwrap();
    assert_ne!(a, b);
    let m = parse("1RZ---").unwrap();
    let e = encode(&m, &InputWord::empty()).unwrap();
    let z = encode(&m, &word("0")).unwrap();
    assert_ne!(e, z);
    assert_eq!(e.decode().unwrap(), (m.clone(), InputWord::empty()));
    assert_eq!(z.decode().unwrap(), (m, word("0")));
}

#[test]
fn gadget_travels_with_the_encoding() {
    let m = parse("1RB---_1RC---_1LZ---")
        .unwrap()
        .with_gadget(StateId(1));
    let e = encode(&m, &InputWord::empty()).unwrap();
    let (back, _) = e.decode().unwrap();
    assert_eq!(back.gadget(), Some(StateId(1)));
    let sim = run_via_utm(&e, &RunLimits::steps(1_000_000))
        .simulated
        .unwrap();
    assert!(sim.halted_via_gadget);
    assert_eq!(sim, expected(&m, &InputWord::empty()));
}

#[test]
fn malformed_words_are_rejected() {
    let e = encode(&parse("1RB---_1LA1RZ").unwrap(), &word("1")).unwrap();
    let bits = e.word.symbols();
    let cut = |n: usize| UtmEncoding {
        word: InputWord::new(bits[..n].to_vec()),
        gadget: None,
    };
    assert_eq!(
        cut(bits.len() - 2).decode(),
        Err(UtmError::Length(bits.len() - 2))
    );
    assert!(cut(bits.len() - 4).decode().is_err());
    assert!(cut(0).decode().is_err());

    // A target naming a third state in a two-state machine.
    let mut cells = macro_cells(&parse("1RB---_1LA1RZ").unwrap(), &word("1"));
    let at = cells.iter().position(|&c| c == U).unwrap();
    cells.insert(at, U);
    let bits: Vec<u8> = cells
        .iter()
        .flat_map(|&c| (0..4).rev().map(move |i| (c >> i) & 1))
        .collect();
    let e = UtmEncoding {
        word: InputWord::new(bits),
        gadget: None,
    };
    assert!(matches!(e.decode(), Err(UtmError::Malformed { .. })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn encoding_round_trips(m in machine_strategy(8), w in prop::collection::vec(0u8..2, 0..12)) {
        let w = InputWord::new(w);
        let e = encode(&m, &w).unwrap();
        prop_assert_eq!(e.decode().unwrap(), (m, w));
    }

    #[test]
    fn small_random_machines_agree(m in machine_strategy(4), w in prop::collection::vec(0u8..2, 0..6)) {
        let w = InputWord::new(w);
        let want = expected(&m, &w);
        if want.halted() {
            prop_assert_eq!(via_utm(&m, &w).simulated, Some(want));
        } else {
            prop_assert!(!via_utm_short(&m, &w).utm.halted());
        }
    }
}
