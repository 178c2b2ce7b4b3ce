//! The `tmlab` command line.
//!
//! Exit codes: 0 on success, 1 on operational errors (bad machine text, I/O),
//! 2 when a question that wants a definite answer got `Unknown`.

mod commands;

use std::io::{BufRead, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use tmlab::corpus::CORPUS_ENV;

pub use commands::CliError;

#[derive(Parser, Debug)]
#[command(name = "tmlab", version, about = "Turing machine laboratory")]
pub struct Cli {
    /// Print one JSON result record per line instead of text.
    #[arg(long, global = true)]
    pub json: bool,

    /// Append every result record to the store in this directory.
    #[arg(long, global = true, value_name = "DIR")]
    pub store: Option<PathBuf>,

    /// Worker threads for batch input (default: all cores).
    #[arg(long, global = true, value_name = "N")]
    pub jobs: Option<usize>,

    /// Corpus file (TSV) for looking machines up by name.
    #[arg(long, global = true, env = CORPUS_ENV, value_name = "FILE")]
    pub corpus: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Limits {
    /// Step budget.
    #[arg(long, value_name = "N")]
    pub max_steps: Option<u64>,

    /// Tape cell budget.
    #[arg(long, value_name = "N")]
    pub max_cells: Option<u64>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Accel {
    /// Accelerated, cross-checked by the direct stepper on small budgets.
    Auto,
    On,
    Off,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum RiceProblem {
    /// Does the machine halt on any input?
    Emptiness,
    /// Does the machine fail to halt on some input?
    AllStrings,
    /// Does the machine halt on exactly one input?
    Password,
    /// Do two machines halt on the same inputs?
    Equivalence,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Simulate a machine. MACHINE is text, a corpus name, or - for one
    /// machine per line on stdin.
    Run {
        machine: String,
        #[arg(long, default_value = "")]
        input: String,
        #[command(flatten)]
        limits: Limits,
        #[arg(long, value_enum, default_value = "auto")]
        accel: Accel,
        /// Include the final tape in the record.
        #[arg(long)]
        tape: bool,
    },
    /// Print the first configurations of a run.
    Trace {
        machine: String,
        #[arg(long, default_value = "")]
        input: String,
        /// Number of configurations, the initial one included.
        #[arg(long, default_value_t = 20)]
        steps: usize,
    },
    /// Halting verdict with a replayable certificate, or Unknown (exit 2).
    Decide {
        machine: String,
        #[arg(long, default_value = "")]
        input: String,
        #[command(flatten)]
        limits: Limits,
    },
    /// Does the machine halt leaving more than K marks? Unknown exits 2.
    BeaverVerify {
        machine: String,
        #[arg(long, value_name = "K")]
        threshold: u64,
        /// Step budget.
        #[arg(long, value_name = "N")]
        budget: Option<u64>,
    },
    /// Classify every n-state machine in tree normal form. Holdouts exit 2.
    BeaverEnumerate {
        n: usize,
        /// Step budget per machine.
        #[arg(long, value_name = "N")]
        budget: Option<u64>,
        /// Also print every machine with its verdict.
        #[arg(long)]
        list: bool,
    },
    /// Run a machine through the universal machine.
    Utm {
        machine: String,
        #[arg(long, default_value = "")]
        input: String,
        #[command(flatten)]
        limits: Limits,
        /// Only print the encoded input word.
        #[arg(long)]
        encode_only: bool,
    },
    /// Compile a machine so that it reaches the harm gadget iff it halts.
    ContainBuild {
        machine: String,
        #[arg(long, default_value = "")]
        input: String,
    },
    /// Label a corpus of contained programs, score oracles against the
    /// labels, and pass every program through the control gate.
    ContainEval {
        /// Machines to compile (text, corpus names, or -). Default: the
        /// bundled programs.
        machines: Vec<String>,
        /// bounded-simulation, deciders, bounded-guess, always-safe, or
        /// external:PATH. Repeatable. Default: the four bundled oracles.
        #[arg(long = "oracle", value_name = "NAME")]
        oracles: Vec<String>,
        /// Oracle step budget.
        #[arg(long, default_value_t = 1_000_000)]
        budget: u64,
        /// Step budget for ground-truth labels; must exceed the oracle budget.
        #[arg(long, default_value_t = 50_000_000)]
        label_budget: u64,
        #[arg(long, default_value = "fail-closed")]
        policy: tmlab::Policy,
        /// Step budget for programs the gate lets run.
        #[arg(long, default_value_t = 10_000)]
        run_steps: u64,
        /// Write the gate's audit log here as JSON lines.
        #[arg(long, value_name = "FILE")]
        audit: Option<PathBuf>,
    },
    /// Semi-decide a Rice property; Unknown exits 2.
    Rice {
        #[arg(value_enum)]
        problem: RiceProblem,
        machine: String,
        /// Second machine, for equivalence.
        other: Option<String>,
        /// Canonical input words to try.
        #[arg(long, default_value_t = 64)]
        words: usize,
        /// Step budget per word in the last round.
        #[arg(long, default_value_t = 100_000)]
        max_steps: u64,
    },
    /// Time the direct and accelerated steppers.
    Bench {
        #[arg(default_value = "bb5")]
        machine: String,
        #[command(flatten)]
        limits: Limits,
    },
}

/// Parses `args` (program name first) and runs the command. Never exits
/// the process.
pub fn run<I, T>(args: I, stdin: &mut dyn BufRead, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = if code == 0 {
                write!(out, "{}", e.render())
            } else {
                write!(err, "{}", e.render())
            };
            return code;
        }
    };
    let json = cli.json;
    match commands::execute(cli, stdin, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = if json {
                writeln!(
                    err,
                    "{}",
                    serde_json::json!({"error": {"code": e.code(), "message": e.to_string()}})
                )
            } else {
                writeln!(err, "error[{}]: {e}", e.code())
            };
            1
        }
    }
}
