use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use polyqtt::compile::{compile_named, run_and_verify, verify_sweep, Observable};
use polyqtt::frontend::{load, LoadOptions};
use polyqtt::machine::{eval, nat_value, Env};
use polyqtt_bench::{corpus, loaded};

fn check(c: &mut Criterion) {
    let mut g = c.benchmark_group("check");
    for file in ["consfree.qtt", "lfpl.qtt", "insertion_sort.qtt"] {
        let src = corpus(file);
        g.bench_function(file, |b| b.iter(|| load(black_box(&src), LoadOptions::default()).unwrap()));
    }
    g.finish();
}

fn compile(c: &mut Criterion) {
    let l = loaded("insertion_sort.qtt");
    c.bench_function("compile/sort", |b| b.iter(|| compile_named(black_box(&l), "sort").unwrap()));
}

fn machine(c: &mut Criterion) {
    let l = loaded("consfree.qtt");
    let mut g = c.benchmark_group("machine/iter2");
    let p = compile_named(&l, "iter2").unwrap();
    for n in [8u64, 16, 32] {
        let env = Env::from_values([polyqtt::MachineValue::pair(nat_value(n), polyqtt::MachineValue::True)]);
        g.bench_with_input(BenchmarkId::from_parameter(n), &env, |b, env| b.iter(|| eval(&p.code, env, u64::MAX)));
    }
    g.finish();
}

fn sort(c: &mut Criterion) {
    let l = loaded("insertion_sort.qtt");
    let p = compile_named(&l, "sort").unwrap();
    let xs: Vec<u64> = (0..16).map(|i| (i * 7) % 11).collect();
    let cells = Observable::tuple(xs.iter().map(|&x| Observable::Nat(x)).chain([Observable::Unit]).collect());
    let input = Observable::pair(Observable::Nat(xs.len() as u64), cells);
    c.bench_function("run/sort16", |b| b.iter(|| run_and_verify(&p, black_box(&input), None).unwrap()));
}

fn sweep(c: &mut Criterion) {
    let l = loaded("lfpl.qtt");
    let p = compile_named(&l, "flip2").unwrap();
    let mut g = c.benchmark_group("verify");
    g.sample_size(10);
    g.bench_function("flip2/30", |b| b.iter(|| verify_sweep(&p, 30, 0).unwrap()));
    g.finish();
}

criterion_group!(benches, check, compile, machine, sort, sweep);
criterion_main!(benches);
