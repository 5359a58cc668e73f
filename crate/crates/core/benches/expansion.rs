//! Parallel versus sequential evaluation.
//!
//! With the `rayon` feature each workload runs twice: on the global pool and
//! inside a one-thread pool, which takes the same code path serially. Build
//! with `--no-default-features` to time the plain iterator fallback instead.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use quatrace::ensemble::{EnsembleKind, Manifest};
use quatrace::expansion::{evaluate, EvalOptions, ExpressionSpec, DEFAULT_CAP};
use quatrace::sample::mc_expectation;
use quatrace::weingarten::{check_pseudoinverse, weingarten_table};

fn gse_spec() -> ExpressionSpec {
    let m = Manifest::single(1, EnsembleKind::Gse);
    ExpressionSpec::from_expr("E[Re(tr(X1 X1 X1* X1 X1* X1*)) Re(tr(X1 X1*))]", m).unwrap()
}

fn ginibre_spec() -> ExpressionSpec {
    let m = Manifest::single(1, EnsembleKind::Ginibre);
    ExpressionSpec::from_expr("E[Re(tr(X1 X1* X1 X1*))]", m).unwrap()
}

#[cfg(feature = "rayon")]
fn modes() -> Vec<(&'static str, Option<rayon::ThreadPool>)> {
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    vec![("rayon", None), ("sequential", Some(one))]
}

#[cfg(not(feature = "rayon"))]
fn modes() -> Vec<(&'static str, Option<()>)> {
    vec![("sequential", None)]
}

#[cfg(feature = "rayon")]
fn run<T: Send>(pool: &Option<rayon::ThreadPool>, f: impl FnOnce() -> T + Send) -> T {
    match pool {
        Some(p) => p.install(f),
        None => f(),
    }
}

#[cfg(not(feature = "rayon"))]
fn run<T>(_: &Option<()>, f: impl FnOnce() -> T) -> T {
    f()
}

fn bench_expansion(c: &mut Criterion) {
    let spec = gse_spec();
    let mut g = c.benchmark_group("evaluate_gse_n8");
    g.sample_size(10);
    for (name, pool) in modes() {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| run(&pool, || evaluate(&spec, &EvalOptions { at: None, cap: DEFAULT_CAP }).unwrap()))
        });
    }
    g.finish();
}

fn bench_weingarten(c: &mut Criterion) {
    let table = weingarten_table(8, None).unwrap();
    let mut g = c.benchmark_group("check_pseudoinverse_8");
    g.sample_size(10);
    for (name, pool) in modes() {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| run(&pool, || check_pseudoinverse(&table).unwrap()))
        });
    }
    g.finish();
}

fn bench_mc(c: &mut Criterion) {
    let spec = ginibre_spec();
    let mut g = c.benchmark_group("mc_ginibre_20k");
    g.sample_size(10);
    for (name, pool) in modes() {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| run(&pool, || mc_expectation(&spec, 3, 20_000, 1).unwrap()))
        });
    }
    g.finish();
}

criterion_group!(benches, bench_expansion, bench_weingarten, bench_mc);
criterion_main!(benches);
