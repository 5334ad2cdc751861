use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use geosub_bench::batch;
use geosub_core::markov::fast_space;
use geosub_core::oracle::{cross_check, recursive_fast_space, recursive_weakly_unobservable};
use geosub_core::slowspace::weakly_unobservable;
use geosub_core::transferdim::dims_from_transfer;
use geosub_core::DEFAULT_TOL;
use std::hint::black_box;

const BATCH: usize = 32;

fn fast(c: &mut Criterion) {
    let mut group = c.benchmark_group("fast_space");
    for n in [2, 4, 6] {
        let systems = batch(n, 2, 2, BATCH);
        group.bench_with_input(BenchmarkId::new("markov", n), &systems, |b, s| {
            b.iter(|| {
                for sys in s.iter() {
                    black_box(fast_space(black_box(sys), DEFAULT_TOL).ok().map(|r| r.dim()));
                }
            })
        });
        group.bench_with_input(BenchmarkId::new("recursion", n), &systems, |b, s| {
            b.iter(|| {
                for sys in s.iter() {
                    black_box(recursive_fast_space(black_box(sys), DEFAULT_TOL).ok().map(|r| r.dim()));
                }
            })
        });
    }
    group.finish();
}

fn slow(c: &mut Criterion) {
    let mut group = c.benchmark_group("slow_space");
    for n in [2, 4, 6] {
        let systems = batch(n, 2, 2, BATCH);
        group.bench_with_input(BenchmarkId::new("pencil", n), &systems, |b, s| {
            b.iter(|| {
                for sys in s.iter() {
                    black_box(weakly_unobservable(black_box(sys), DEFAULT_TOL).ok().map(|r| r.0.dim()));
                }
            })
        });
        group.bench_with_input(BenchmarkId::new("recursion", n), &systems, |b, s| {
            b.iter(|| {
                for sys in s.iter() {
                    black_box(
                        recursive_weakly_unobservable(black_box(sys), DEFAULT_TOL).ok().map(|r| r.dim()),
                    );
                }
            })
        });
    }
    group.finish();
}

fn transfer(c: &mut Criterion) {
    let mut group = c.benchmark_group("dims_from_transfer");
    for (m, p) in [(2, 2), (2, 3)] {
        let systems = batch(5, m, p, BATCH);
        group.bench_with_input(BenchmarkId::new(format!("{m}x{p}"), 5), &systems, |b, s| {
            b.iter(|| {
                for sys in s.iter() {
                    black_box(dims_from_transfer(black_box(sys), DEFAULT_TOL).ok().map(|d| d.n_s));
                }
            })
        });
    }
    group.finish();
}

fn full_check(c: &mut Criterion) {
    let systems = batch(4, 2, 2, BATCH);
    c.bench_function("cross_check/4x2x2", |b| {
        b.iter(|| {
            for sys in systems.iter() {
                black_box(cross_check(black_box(sys), DEFAULT_TOL).ok().map(|r| r.compared()));
            }
        })
    });
}

criterion_group!(benches, fast, slow, transfer, full_check);
criterion_main!(benches);
