use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::PathBuf;
use std::time::Instant;

use rayon::prelude::*;
use serde_json::{json, Value};
use tmlab::containment::{
    bundled_programs, label_corpus, AlwaysSafe, AuditLog, BoundedGuess, BoundedSimulation,
    DeciderOracle, ExternalOracle, HarmOracle, Scorecard,
};
use tmlab::corpus::{self, CorpusEntry};
use tmlab::deciders::{decide, enumerate, enumerate_machines, ThresholdAnswer};
use tmlab::rice::{
    semi_decide_all_strings, semi_decide_emptiness, semi_decide_equivalence, semi_decide_password,
    RiceBudget, RiceVerdict,
};
use tmlab::simulator::{run_with, DEFAULT_MAX_CELLS, DEFAULT_MAX_STEPS};
use tmlab::store::{budgets_of, Ack, RecordKind, ResultRecord, Store, StoreError};
use tmlab::tape::Tape;
use tmlab::utm::{encode, run_via_utm};
use tmlab::{
    busy_beaver_threshold, control_gate, evaluate_oracle, make_halt_harm, parse, run_accelerated,
    run_direct, serialize, trace, InputWord, Machine, RunLimits, Stepper,
};

use crate::{Accel, Cli, Command, Limits, RiceProblem};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("cannot parse {what} {input:?}: {message}")]
    Parse {
        what: &'static str,
        input: String,
        message: String,
    },
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Store(#[from] StoreError),
    #[error("{0}")]
    Corpus(#[from] corpus::CorpusError),
    #[error("{0}")]
    Mismatch(String),
    #[error("{0}")]
    Compile(String),
}

impl CliError {
    pub fn code(&self) -> &'static str {
        match self {
            CliError::Parse { .. } => "parse",
            CliError::Usage(_) => "usage",
            CliError::Io(_) => "io",
            CliError::Store(_) => "store",
            CliError::Corpus(_) => "corpus",
            CliError::Mismatch(_) => "stepper-mismatch",
            CliError::Compile(_) => "compile",
        }
    }
}

/// One result: the record, its text rendering, and whether it left the
/// question open.
struct Report {
    record: Option<ResultRecord>,
    json: Value,
    text: String,
    unknown: bool,
}

impl Report {
    fn new(record: ResultRecord, text: String, unknown: bool) -> Self {
        Report {
            json: serde_json::to_value(&record).expect("record serializes"),
            record: Some(record),
            text,
            unknown,
        }
    }
}

struct Ctx {
    json: bool,
    store: Option<Store>,
    pool: rayon::ThreadPool,
    corpus: Vec<CorpusEntry>,
}

fn limits(l: &Limits, default_steps: u64) -> RunLimits {
    RunLimits::steps(l.max_steps.unwrap_or(default_steps).max(1))
        .with_cells(l.max_cells.unwrap_or(DEFAULT_MAX_CELLS))
        .with_snapshot_cells(0)
}

fn input(s: &str) -> Result<InputWord, CliError> {
    s.parse()
        .map_err(|e: tmlab::machine::InputWordError| CliError::Parse {
            what: "input word",
            input: s.to_string(),
            message: e.to_string(),
        })
}

fn text_of(m: &Machine) -> String {
    serialize(m).unwrap_or_else(|_| m.to_string())
}

impl Ctx {
    fn resolve(&self, arg: &str) -> Result<(String, Machine), CliError> {
        match parse(arg) {
            Ok(m) => Ok((arg.to_string(), m)),
            Err(e) => self
                .corpus
                .iter()
                .find(|c| c.name == arg)
                .cloned()
                .or_else(|| corpus::bundled_by_name(arg))
                .map(|c| (c.text, c.machine))
                .ok_or_else(|| CliError::Parse {
                    what: "machine",
                    input: arg.to_string(),
                    message: e.to_string(),
                }),
        }
    }

    /// `arg` itself, or every non-empty, non-comment line of stdin for `-`.
    fn items(&self, arg: &str, stdin: &mut dyn BufRead) -> Result<Vec<String>, CliError> {
        if arg != "-" {
            return Ok(vec![arg.to_string()]);
        }
        let mut out = Vec::new();
        for line in stdin.lines() {
            let line = line?;
            let t = line.trim();
            if !t.is_empty() && !t.starts_with('#') {
                out.push(t.to_string());
            }
        }
        Ok(out)
    }

    fn batch<F>(&self, items: Vec<String>, f: F) -> Vec<Result<Report, CliError>>
    where
        F: Fn(&str, &Machine) -> Result<Report, CliError> + Sync,
    {
        self.pool.install(|| {
            items
                .par_iter()
                .map(|item| {
                    let (text, m) = self.resolve(item)?;
                    f(&text, &m)
                })
                .collect()
        })
    }

    fn emit(
        &mut self,
        reports: Vec<Result<Report, CliError>>,
        out: &mut dyn Write,
        err: &mut dyn Write,
    ) -> Result<i32, CliError> {
        let mut code = 0;
        for r in reports {
            match r {
                Ok(r) => {
                    if self.json {
                        writeln!(out, "{}", r.json)?;
                    } else {
                        writeln!(out, "{}", r.text)?;
                    }
                    if let (Some(store), Some(record)) = (&mut self.store, &r.record) {
                        if let Ack::Duplicate { hash } = store.append(record)? {
                            writeln!(err, "note: record {} already stored", &hash[..12])?;
                        }
                    }
                    if r.unknown && code == 0 {
                        code = 2;
                    }
                }
                Err(e) => {
                    if self.json {
                        writeln!(
                            err,
                            "{}",
                            json!({"error": {"code": e.code(), "message": e.to_string()}})
                        )?;
                    } else {
                        writeln!(err, "error[{}]: {e}", e.code())?;
                    }
                    code = 1;
                }
            }
        }
        Ok(code)
    }
}

pub fn execute(
    cli: Cli,
    stdin: &mut dyn BufRead,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = cli.jobs {
        builder = builder.num_threads(j.max(1));
    }
    let corpus = match &cli.corpus {
        Some(path) => corpus::load_corpus(path)?,
        None => Vec::new(),
    };
    let mut ctx = Ctx {
        json: cli.json,
        store: cli.store.as_ref().map(Store::open).transpose()?,
        pool: builder
            .build()
            .map_err(|e| CliError::Usage(e.to_string()))?,
        corpus,
    };
    let reports = match cli.command {
        Command::Run {
            machine,
            input: w,
            limits: l,
            accel,
            tape,
        } => {
            let w = input(&w)?;
            let mut lim = limits(&l, DEFAULT_MAX_STEPS);
            if tape {
                lim = lim.with_snapshot_cells(tmlab::simulator::DEFAULT_SNAPSHOT_CELLS);
            }
            let stepper = match accel {
                Accel::Auto => Stepper::Auto,
                Accel::On => Stepper::Accelerated,
                Accel::Off => Stepper::Direct,
            };
            let items = ctx.items(&machine, stdin)?;
            ctx.batch(items, |text, m| {
                let mut o = run_with(m, &w, &lim, stepper)
                    .map_err(|e| CliError::Mismatch(e.to_string()))?;
                if !tape {
                    o.tape = None;
                }
                let mut line = format!("{text} {o}");
                if let Some(t) = &o.tape {
                    write!(line, "\ntape start={} {}", t.start, t.cells).unwrap();
                }
                let r = ResultRecord::new(
                    RecordKind::Run,
                    Some(text.to_string()),
                    Some(w.clone()),
                    &o,
                    budgets_of(&lim),
                );
                Ok(Report::new(r, line, false))
            })
        }
        Command::Trace {
            machine,
            input: w,
            steps,
        } => {
            let w = input(&w)?;
            let (text, m) = ctx.resolve(&machine)?;
            vec![Ok(trace_report(&text, &m, &w, steps.max(1)))]
        }
        Command::Decide {
            machine,
            input: w,
            limits: l,
        } => {
            let w = input(&w)?;
            let lim = limits(&l, 1_000_000);
            let items = ctx.items(&machine, stdin)?;
            ctx.batch(items, |text, m| {
                let v = decide(m, &w, &lim);
                let line = format!("{text} {v}");
                let unknown = v.is_unknown();
                let r = ResultRecord::new(
                    RecordKind::Decision,
                    Some(text.to_string()),
                    Some(w.clone()),
                    &v,
                    budgets_of(&lim),
                );
                Ok(Report::new(r, line, unknown))
            })
        }
        Command::BeaverVerify {
            machine,
            threshold,
            budget,
        } => {
            let lim =
                RunLimits::steps(budget.unwrap_or(DEFAULT_MAX_STEPS).max(1)).with_snapshot_cells(0);
            let items = ctx.items(&machine, stdin)?;
            ctx.batch(items, |text, m| {
                let a = busy_beaver_threshold(m, threshold, &lim);
                let line = format!("{text} threshold={threshold} {a}");
                let unknown = matches!(a, ThresholdAnswer::Unknown { .. });
                let mut payload = serde_json::to_value(&a).expect("answer serializes");
                payload["threshold"] = json!(threshold);
                let r = ResultRecord::new(
                    RecordKind::Threshold,
                    Some(text.to_string()),
                    Some(InputWord::empty()),
                    &payload,
                    budgets_of(&lim),
                );
                Ok(Report::new(r, line, unknown))
            })
        }
        Command::BeaverEnumerate { n, budget, list } => {
            let budget = budget
                .unwrap_or(tmlab::deciders::DEFAULT_ENUMERATION_BUDGET)
                .max(1);
            let report = ctx
                .pool
                .install(|| enumerate(n, budget))
                .map_err(|e| CliError::Usage(e.to_string()))?;
            let mut reports = Vec::new();
            if list {
                let all = ctx
                    .pool
                    .install(|| enumerate_machines(n, budget))
                    .map_err(|e| CliError::Usage(e.to_string()))?;
                let lim = RunLimits::steps(budget);
                for c in all {
                    let line = format!("{} {}", c.text, c.verdict);
                    let r = ResultRecord::new(
                        RecordKind::Decision,
                        Some(c.text.clone()),
                        Some(InputWord::empty()),
                        &c.verdict,
                        budgets_of(&lim),
                    );
                    reports.push(Ok(Report::new(r, line, false)));
                }
            }
            let c = &report.counts;
            let mut text = format!(
                "n={} machines={} halting={} never_halting={} holdouts={}\nsigma={} ({})\ns={} ({})",
                report.n,
                c.machines,
                c.halting,
                c.never_halting,
                c.holdouts,
                report.sigma,
                report.sigma_champions.join(" "),
                report.s,
                report.s_champions.join(" "),
            );
            for h in &report.holdouts {
                write!(text, "\nholdout {h}").unwrap();
            }
            let unknown = !report.is_closed();
            let r = ResultRecord::new(
                RecordKind::Enumeration,
                None,
                None,
                &report,
                json!({"max_steps": budget.to_string()}),
            );
            reports.push(Ok(Report::new(r, text, unknown)));
            reports
        }
        Command::Utm {
            machine,
            input: w,
            limits: l,
            encode_only,
        } => {
            let w = input(&w)?;
            let (text, m) = ctx.resolve(&machine)?;
            let enc = encode(&m, &w).map_err(|e| CliError::Compile(e.to_string()))?;
            let lim = limits(&l, DEFAULT_MAX_STEPS);
            if encode_only {
                let payload = json!({"encoding": enc.word.to_string(), "bits": enc.word.len()});
                let r =
                    ResultRecord::new(RecordKind::Utm, Some(text), Some(w), &payload, json!({}));
                vec![Ok(Report::new(r, enc.word.to_string(), false))]
            } else {
                let run = run_via_utm(&enc, &lim);
                let line = format!(
                    "universal machine: {}\nsimulated: {}",
                    run.utm,
                    run.simulated
                        .as_ref()
                        .map_or("not halted within budget".to_string(), |o| o.to_string())
                );
                let payload = json!({
                    "bits": enc.word.len(),
                    "utm": run.utm,
                    "simulated": run.simulated,
                });
                let r = ResultRecord::new(
                    RecordKind::Utm,
                    Some(text),
                    Some(w),
                    &payload,
                    budgets_of(&lim),
                );
                vec![Ok(Report::new(r, line, false))]
            }
        }
        Command::ContainBuild { machine, input: w } => {
            let w = input(&w)?;
            let items = ctx.items(&machine, stdin)?;
            ctx.batch(items, |text, m| {
                let p = make_halt_harm(m, &w).map_err(|e| CliError::Compile(e.to_string()))?;
                let compiled = text_of(&p.machine);
                let g = p
                    .machine
                    .gadget()
                    .expect("compiled programs carry a gadget");
                let line = format!("{compiled} gadget={}", g);
                let payload = json!({"compiled": compiled, "gadget": g.to_string()});
                let r = ResultRecord::new(
                    RecordKind::HaltHarm,
                    Some(text.to_string()),
                    Some(w.clone()),
                    &payload,
                    json!({}),
                );
                Ok(Report::new(r, line, false))
            })
        }
        Command::ContainEval {
            machines,
            oracles,
            budget,
            label_budget,
            policy,
            run_steps,
            audit,
        } => {
            if label_budget <= budget {
                return Err(CliError::Usage(format!(
                    "--label-budget ({label_budget}) must exceed the oracle --budget ({budget})"
                )));
            }
            let programs = if machines.is_empty() {
                bundled_programs()
            } else {
                let mut items = Vec::new();
                for m in &machines {
                    items.extend(ctx.items(m, stdin)?);
                }
                let mut programs = Vec::new();
                for item in items {
                    let (text, m) = ctx.resolve(&item)?;
                    let p = make_halt_harm(&m, &InputWord::empty())
                        .map_err(|e| CliError::Compile(e.to_string()))?;
                    programs.push((format!("halt-harm({text})"), p));
                }
                programs
            };
            let oracles = oracle_list(&oracles, budget)?;
            let label_lim = RunLimits::steps(label_budget);
            let labeled = ctx.pool.install(|| label_corpus(programs, &label_lim));
            let mut reports = Vec::new();
            for l in &labeled {
                let mut payload = serde_json::to_value(&l.truth).expect("label serializes");
                payload["name"] = json!(l.name);
                let r = ResultRecord::new(
                    RecordKind::HarmLabel,
                    Some(text_of(&l.program.machine)),
                    Some(l.program.input.clone()),
                    &payload,
                    budgets_of(&label_lim),
                );
                let line = format!("{}: {}", l.name, l.truth);
                reports.push(Ok(Report::new(r, line, false)));
            }
            let mut log = match &audit {
                Some(path) => AuditLog::with_sink(std::fs::File::create(path)?),
                None => AuditLog::new(),
            };
            let gate_lim = RunLimits::steps(run_steps.max(1)).with_snapshot_cells(0);
            for oracle in &oracles {
                let card = ctx
                    .pool
                    .install(|| evaluate_oracle(oracle.as_ref(), &labeled));
                reports.push(Ok(scorecard_report(&card, budget)));
                let before = log.records().len();
                for l in &labeled {
                    control_gate(
                        oracle.as_ref(),
                        &l.program,
                        &l.program.input,
                        policy,
                        &gate_lim,
                        &mut log,
                    )
                    .map_err(|e| CliError::Io(std::io::Error::other(e.to_string())))?;
                }
                let records = &log.records()[before..];
                let executed = records.iter().filter(|r| r.executed).count();
                let summary = json!({
                    "oracle": oracle.name(),
                    "policy": policy,
                    "executed": executed,
                    "disabled": records.len() - executed,
                    "violations": log.violations().len(),
                });
                reports.push(Ok(Report {
                    record: None,
                    text: format!(
                        "gate {} {policy}: executed={executed} disabled={} violations={}",
                        oracle.name(),
                        records.len() - executed,
                        log.violations().len()
                    ),
                    json: json!({"gate": summary}),
                    unknown: false,
                }));
            }
            reports
        }
        Command::Rice {
            problem,
            machine,
            other,
            words,
            max_steps,
        } => {
            let (text, m) = ctx.resolve(&machine)?;
            let budget = RiceBudget {
                words: words.max(1),
                max_steps: max_steps.max(1),
            };
            let (verdict, other_text): (RiceVerdict, Option<String>) = match problem {
                RiceProblem::Emptiness => (semi_decide_emptiness(&m, budget), None),
                RiceProblem::AllStrings => (semi_decide_all_strings(&m, budget), None),
                RiceProblem::Password => (semi_decide_password(&m, budget), None),
                RiceProblem::Equivalence => {
                    let other = other.ok_or_else(|| {
                        CliError::Usage("equivalence needs a second machine".to_string())
                    })?;
                    let (t2, m2) = ctx.resolve(&other)?;
                    (semi_decide_equivalence(&m, &m2, budget), Some(t2))
                }
            };
            let name = match problem {
                RiceProblem::Emptiness => "emptiness",
                RiceProblem::AllStrings => "all-strings",
                RiceProblem::Password => "password",
                RiceProblem::Equivalence => "equivalence",
            };
            let mut payload = serde_json::to_value(&verdict).expect("verdict serializes");
            payload["problem"] = json!(name);
            if let Some(t2) = &other_text {
                payload["other"] = json!(t2);
            }
            let unknown = !verdict.is_proved();
            let line = format!("{name} {text}: {verdict}");
            let r = ResultRecord::new(
                RecordKind::Rice,
                Some(text),
                None,
                &payload,
                serde_json::to_value(budget).expect("budget serializes"),
            );
            vec![Ok(Report::new(r, line, unknown))]
        }
        Command::Bench { machine, limits: l } => {
            let (text, m) = ctx.resolve(&machine)?;
            let lim = limits(&l, DEFAULT_MAX_STEPS);
            let w = InputWord::empty();
            let t = Instant::now();
            let direct = run_direct(&m, &w, &lim);
            let direct_secs = t.elapsed().as_secs_f64();
            let t = Instant::now();
            let fast = run_accelerated(&m, &w, &lim);
            let fast_secs = t.elapsed().as_secs_f64();
            if direct != fast {
                return Err(CliError::Mismatch(format!("{direct} vs {fast}")));
            }
            let steps = direct.steps_u64().unwrap_or(u64::MAX) as f64;
            let line = format!(
                "{text} {direct}\ndirect      {direct_secs:.3}s  {:.3e} steps/s\naccelerated {fast_secs:.3}s  {:.3e} steps/s",
                steps / direct_secs.max(1e-9),
                steps / fast_secs.max(1e-9),
            );
            vec![Ok(Report {
                record: None,
                json: json!({
                    "machine": text,
                    "outcome": direct,
                    "direct_seconds": direct_secs,
                    "accelerated_seconds": fast_secs,
                }),
                text: line,
                unknown: false,
            })]
        }
    };
    ctx.emit(reports, out, err)
}

fn trace_report(text: &str, m: &Machine, w: &InputWord, steps: usize) -> Report {
    let configs = trace(m, w, steps);
    let (lo, hi) = configs.iter().fold((0i64, 0i64), |(lo, hi), c| {
        let (a, b) = c.tape.extent();
        (lo.min(a).min(c.head), hi.max(b).max(c.head))
    });
    let mut lines = Vec::new();
    let mut rows = Vec::new();
    for (i, c) in configs.iter().enumerate() {
        let cells: String = (lo..=hi)
            .map(|k| if c.tape.cell(k) == 1 { '1' } else { '0' })
            .collect();
        let mut shown = String::new();
        for (k, ch) in (lo..=hi).zip(cells.chars()) {
            if k == c.head {
                write!(shown, "[{ch}]").unwrap();
            } else {
                shown.push(ch);
            }
        }
        lines.push(format!("{i:>5} {} {:>4} {shown}", c.state, c.head));
        rows.push(json!({"step": i, "state": c.state, "head": c.head, "cells": cells}));
    }
    let payload = json!({"start": lo, "configurations": rows});
    let r = ResultRecord::new(
        RecordKind::Trace,
        Some(text.to_string()),
        Some(w.clone()),
        &payload,
        json!({"configurations": steps}),
    );
    Report::new(r, lines.join("\n"), false)
}

fn scorecard_report(card: &Scorecard, budget: u64) -> Report {
    let t = &card.tallies;
    let line = format!(
        "{}: correct_harmful={} correct_safe={} false_harmful={} false_safe={} unknown={} errors={}",
        card.oracle,
        t.correct_harmful,
        t.correct_safe,
        t.false_harmful,
        t.false_safe,
        t.unknowns(),
        t.errors()
    );
    let r = ResultRecord::new(
        RecordKind::Scorecard,
        None,
        None,
        card,
        json!({"oracle_max_steps": budget.to_string()}),
    );
    Report::new(r, line, false)
}

fn oracle_list(names: &[String], budget: u64) -> Result<Vec<Box<dyn HarmOracle>>, CliError> {
    let defaults = [
        "bounded-simulation",
        "deciders",
        "bounded-guess",
        "always-safe",
    ];
    let names: Vec<&str> = if names.is_empty() {
        defaults.to_vec()
    } else {
        names.iter().map(String::as_str).collect()
    };
    names
        .into_iter()
        .map(|n| -> Result<Box<dyn HarmOracle>, CliError> {
            Ok(match n {
                "bounded-simulation" => Box::new(BoundedSimulation { budget }),
                "deciders" => Box::new(DeciderOracle { budget }),
                "bounded-guess" => Box::new(BoundedGuess { budget }),
                "always-safe" => Box::new(AlwaysSafe),
                other => match other.strip_prefix("external:") {
                    Some(path) => Box::new(ExternalOracle::new(PathBuf::from(path), budget)),
                    None => return Err(CliError::Usage(format!("unknown oracle {other:?}"))),
                },
            })
        })
        .collect()
}
