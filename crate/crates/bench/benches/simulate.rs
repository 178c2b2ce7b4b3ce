use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use tmlab::corpus::bundled_by_name;
use tmlab::deciders::decide;
use tmlab::utm::{encode, run_via_utm};
use tmlab::{run_accelerated, run_direct, InputWord, Machine, RunLimits};

fn machine(name: &str) -> Machine {
    bundled_by_name(name).expect("bundled machine").machine
}

fn champion(c: &mut Criterion) {
    let m = machine("bb5");
    let w = InputWord::empty();
    let lim = RunLimits::default().with_snapshot_cells(0);
    let mut g = c.benchmark_group("champion");
    g.sample_size(10);
    g.bench_function("direct", |b| b.iter(|| run_direct(black_box(&m), &w, &lim)));
    g.bench_function("accelerated", |b| {
        b.iter(|| run_accelerated(black_box(&m), &w, &lim))
    });
    g.finish();
}

fn deciders(c: &mut Criterion) {
    let w = InputWord::empty();
    let lim = RunLimits::steps(100_000).with_snapshot_cells(0);
    let mut g = c.benchmark_group("decide");
    for name in ["bouncer", "right-forever", "bb4", "holdout-a"] {
        let m = machine(name);
        g.bench_function(name, |b| b.iter(|| decide(black_box(&m), &w, &lim)));
    }
    g.finish();
}

fn utm(c: &mut Criterion) {
    let enc = encode(&machine("bb3"), &InputWord::empty()).unwrap();
    let lim = RunLimits::steps(10_000_000).with_snapshot_cells(0);
    c.bench_function("utm/bb3", |b| b.iter(|| run_via_utm(black_box(&enc), &lim)));
}

criterion_group!(benches, champion, deciders, utm);
criterion_main!(benches);
