use std::io::Cursor;

use serde_json::Value;

fn tmlab(args: &[&str]) -> (i32, String, String) {
    tmlab_stdin(args, "")
}

fn tmlab_stdin(args: &[&str], stdin: &str) -> (i32, String, String) {
    let mut argv = vec!["tmlab"];
    argv.extend_from_slice(args);
    let mut input = Cursor::new(stdin.as_bytes().to_vec());
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = tmlab_cli::run(argv, &mut input, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

fn json_lines(s: &str) -> Vec<Value> {
    s.lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

const CHAMPION_5: &str = "1RB1LC_1RC1RB_1RD0LE_1LA1LD_1RZ0LA";

#[test]
fn run_champion_json() {
    let (code, out, _) = tmlab(&["run", CHAMPION_5, "--max-steps", "100000000", "--json"]);
    assert_eq!(code, 0);
    let rec = &json_lines(&out)[0];
    assert_eq!(rec["kind"], "run");
    assert_eq!(rec["payload"]["kind"], "halted");
    assert_eq!(rec["payload"]["steps"], "47176870");
    assert_eq!(rec["payload"]["marks"], 4098);
}

#[test]
fn run_by_corpus_name() {
    let (code, out, _) = tmlab(&["run", "bb4"]);
    assert_eq!(code, 0);
    assert!(out.contains("halted steps=107 marks=13"), "{out}");
}

#[test]
fn run_step_limit_is_not_an_error() {
    let (code, out, _) = tmlab(&["run", "1RA1RA", "--max-steps", "50"]);
    assert_eq!(code, 0);
    assert!(out.contains("step_limit steps=50"), "{out}");
}

#[test]
fn run_with_tape() {
    let (_, out, _) = tmlab(&["run", "bb3", "--tape"]);
    assert!(out.contains("tape start=-1 11111"), "{out}");
}

#[test]
fn run_steppers_agree() {
    let (_, direct, _) = tmlab(&["run", "bb4", "--accel", "off"]);
    let (_, fast, _) = tmlab(&["run", "bb4", "--accel", "on"]);
    assert_eq!(direct, fast);
}

#[test]
fn run_batch_from_stdin() {
    let (code, out, _) = tmlab_stdin(&["--jobs", "2", "run", "-"], "bb1\n# comment\n\nbb2\n");
    assert_eq!(code, 0);
    let lines: Vec<_> = out.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("1RZ--- halted steps=1"));
    assert!(lines[1].starts_with("1RB1LB_1LA1RZ halted steps=6"));
}

#[test]
fn run_with_input_word() {
    let (code, out, _) = tmlab(&["run", "1RA1RZ", "--input", "0001"]);
    assert_eq!(code, 0);
    assert!(out.contains("halted steps=4"), "{out}");
}

#[test]
fn parse_error_exits_1_with_code() {
    let (code, _, err) = tmlab(&["run", "1XB---"]);
    assert_eq!(code, 1);
    assert!(err.starts_with("error[parse]"), "{err}");
    let (code, _, err) = tmlab(&["--json", "run", "1XB---"]);
    assert_eq!(code, 1);
    let e: Value = serde_json::from_str(err.trim()).unwrap();
    assert_eq!(e["error"]["code"], "parse");
}

#[test]
fn bad_input_word_exits_1() {
    let (code, _, _) = tmlab(&["run", "bb2", "--input", "012"]);
    assert_eq!(code, 1);
}

#[test]
fn usage_errors_exit_1_help_exits_0() {
    assert_eq!(tmlab(&["frobnicate"]).0, 1);
    let (code, out, _) = tmlab(&["--help"]);
    assert_eq!(code, 0);
    assert!(out.contains("beaver-enumerate"));
}

#[test]
fn trace_shows_head() {
    let (code, out, _) = tmlab(&["trace", "bb2", "--steps", "3"]);
    assert_eq!(code, 0);
    let lines: Vec<_> = out.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].contains("[0]"));
    assert!(lines[1].contains(" B "));
}

#[test]
fn decide_bouncer_exact_cycle() {
    let (code, out, _) = tmlab(&["decide", "0RB---_0LA---", "--json"]);
    assert_eq!(code, 0);
    let rec = &json_lines(&out)[0];
    assert_eq!(rec["payload"]["verdict"], "never_halts");
    assert_eq!(rec["payload"]["certificate"]["kind"], "exact_cycle");
}

#[test]
fn decide_holdout_is_unknown_exit_2() {
    let (code, out, _) = tmlab(&["decide", "holdout-a", "--max-steps", "100000"]);
    assert_eq!(code, 2);
    assert!(out.contains("unknown"), "{out}");
}

#[test]
fn beaver_verify_answers() {
    let (code, out, _) = tmlab(&["beaver-verify", "bb5", "--threshold", "4097"]);
    assert_eq!(code, 0);
    assert!(
        out.contains("above (halts steps=47176870 marks=4098)"),
        "{out}"
    );
    let (code, out, _) = tmlab(&["beaver-verify", "bb5", "--threshold", "4098"]);
    assert_eq!(code, 0);
    assert!(out.contains("not above"), "{out}");
}

#[test]
fn beaver_verify_holdout_exits_2() {
    let (code, _, _) = tmlab(&[
        "beaver-verify",
        "holdout-a",
        "--threshold",
        "100",
        "--budget",
        "1000000",
    ]);
    assert_eq!(code, 2);
}

#[test]
fn beaver_enumerate_two_states() {
    let (code, out, _) = tmlab(&["--json", "beaver-enumerate", "2"]);
    assert_eq!(code, 0);
    let rec = json_lines(&out).pop().unwrap();
    assert_eq!(rec["kind"], "enumeration");
    assert_eq!(rec["payload"]["sigma"], 4);
    assert_eq!(rec["payload"]["s"], 6);
    assert_eq!(rec["payload"]["holdouts"].as_array().unwrap().len(), 0);
}

#[test]
fn beaver_enumerate_lists_machines() {
    let (code, out, _) = tmlab(&["beaver-enumerate", "1", "--list"]);
    assert_eq!(code, 0);
    assert!(out.lines().count() > 1);
    assert!(out.contains("sigma=1"));
}

#[test]
fn utm_reports_both_levels() {
    let (code, out, _) = tmlab(&["utm", "bb2"]);
    assert_eq!(code, 0);
    assert!(out.contains("simulated: halted steps=6 marks=4"), "{out}");
    let (_, bits, _) = tmlab(&["utm", "bb2", "--encode-only"]);
    let bits = bits.trim();
    assert!(bits.chars().all(|c| c == '0' || c == '1'));
    assert_eq!(bits.len() % 4, 3);
}

#[test]
fn contain_build_champion() {
    let (code, out, _) = tmlab(&["contain-build", CHAMPION_5]);
    assert_eq!(code, 0);
    assert_eq!(
        out.trim(),
        "1RB1LC_1RC1RB_1RD0LE_1LA1LD_1RF0LA_1RG1RG_1LZ1LZ gadget=F"
    );
}

#[test]
fn contain_eval_small_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let audit = dir.path().join("audit.jsonl");
    let (code, out, _) = tmlab(&[
        "--json",
        "contain-eval",
        "bb2",
        "0RB---_0LA---",
        "--oracle",
        "bounded-guess",
        "--oracle",
        "deciders",
        "--budget",
        "3",
        "--label-budget",
        "1000",
        "--audit",
        audit.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{out}");
    let recs = json_lines(&out);
    let cards: Vec<_> = recs.iter().filter(|r| r["kind"] == "scorecard").collect();
    assert_eq!(cards.len(), 2);
    // halt-harm(bb2) needs 8 steps, so a 3-step guess calls it safe.
    assert_eq!(cards[0]["payload"]["tallies"]["false_safe"], 1);
    assert_eq!(cards[1]["payload"]["tallies"]["false_safe"], 0);
    let gates: Vec<_> = recs.iter().filter(|r| r.get("gate").is_some()).collect();
    assert!(gates.iter().all(|g| g["gate"]["violations"] == 0));
    let audit = std::fs::read_to_string(audit).unwrap();
    assert_eq!(audit.lines().count(), 4);
}

#[test]
fn contain_eval_rejects_small_label_budget() {
    let (code, _, err) = tmlab(&[
        "contain-eval",
        "bb2",
        "--budget",
        "10",
        "--label-budget",
        "10",
    ]);
    assert_eq!(code, 1);
    assert!(err.contains("label-budget"), "{err}");
}

#[test]
fn rice_verdicts() {
    let (code, out, _) = tmlab(&["rice", "emptiness", "bb2"]);
    assert_eq!(code, 0);
    assert!(out.contains("proved yes"), "{out}");
    let (code, _, _) = tmlab(&[
        "rice",
        "emptiness",
        "1RA1RA",
        "--words",
        "4",
        "--max-steps",
        "100",
    ]);
    assert_ne!(code, 1);
    let (code, _, err) = tmlab(&["rice", "equivalence", "bb2"]);
    assert_eq!(code, 1);
    assert!(err.contains("second machine"));
}

#[test]
fn store_appends_and_deduplicates() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().to_str().unwrap();
    let (code, _, err) = tmlab(&["--store", root, "run", "bb2"]);
    assert_eq!(code, 0);
    assert!(err.is_empty());
    let (_, _, err) = tmlab(&["--store", root, "run", "bb2"]);
    assert!(err.contains("already stored"), "{err}");
    let store = tmlab::Store::open(dir.path()).unwrap();
    assert_eq!(store.len(), 1);
}

#[test]
fn bench_runs() {
    let (code, out, _) = tmlab(&["bench", "bb4"]);
    assert_eq!(code, 0);
    assert!(out.contains("accelerated"));
}
