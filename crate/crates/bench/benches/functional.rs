use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use memfun_core::grid::integrate_plain;
use memfun_core::sensitivity::{induce_with, AccumulatorMethod};
use memfun_core::{compute_s_with, FunctionalOptions, Kernel, SensitivityModel, TimeDomain, Trajectory};

fn signal(d: &TimeDomain) -> Trajectory {
    Trajectory::from_fn(d, |t| (6.0 * t).sin() + 0.4 * (17.0 * t).cos())
}

fn historical(d: &TimeDomain) -> SensitivityModel {
    let r = Trajectory::from_fn(d, |t| 0.5 * (3.0 * t).sin());
    SensitivityModel::historical(r, 1.0, 2.0, 1.5, 0.5, 1.5).unwrap()
}

fn functional(c: &mut Criterion) {
    let mut group = c.benchmark_group("compute_s");
    group.sample_size(10);
    for n in [257usize, 1025] {
        let d = TimeDomain::uniform(1.0, n).unwrap();
        let f = signal(&d);
        let k = Kernel::exponential(2.0, &d).unwrap();
        let m = historical(&d);
        for (label, fast_path) in [("fast", true), ("direct", false)] {
            let opts = FunctionalOptions {
                fast_path,
                ..Default::default()
            };
            group.bench_with_input(BenchmarkId::new(label, n), &n, |b, _| {
                b.iter(|| compute_s_with(black_box(&f), &k, &m, &opts).unwrap())
            });
        }
    }
    group.finish();
}

fn accumulator(c: &mut Criterion) {
    let mut group = c.benchmark_group("induce");
    group.sample_size(10);
    let d = TimeDomain::uniform(1.0, 513).unwrap();
    let f = signal(&d);
    let m = historical(&d);
    for (label, method) in [("recurrence", AccumulatorMethod::Recurrence), ("direct", AccumulatorMethod::Direct)] {
        group.bench_function(label, |b| b.iter(|| induce_with(&m, black_box(&f), method).unwrap()));
    }
    group.finish();
}

fn quadrature(c: &mut Criterion) {
    c.bench_function("integrate_plain", |b| {
        b.iter(|| integrate_plain(|t| (-black_box(3.0) * t).exp() * (9.0 * t).sin(), 0.0, 1.0, 1e-10).unwrap())
    });
}

criterion_group!(benches, functional, accumulator, quadrature);
criterion_main!(benches);
