use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use reallot_bench::profiles;
use reallot_core::domains::{enumerate_single_peaked, single_peaked_violation};
use reallot_core::efficiency::{brute_force_dominator, find_blocking_pair, find_improving_cycle};
use reallot_core::equivalence::verify_equivalence;
use reallot_core::rules::ttc;
use reallot_core::{DomainSpec, LinearOrder, Scope, VerifyOptions};

fn efficiency_checks(c: &mut Criterion) {
    let mut group = c.benchmark_group("efficiency");
    for n in [4usize, 6, 8] {
        let sample = profiles(&DomainSpec::unrestricted(n), 32);
        let allocs: Vec<_> = sample[0]
            .instance()
            .allocations()
            .step_by(97)
            .take(32)
            .collect();
        group.bench_with_input(BenchmarkId::new("blocking_pair", n), &n, |b, _| {
            b.iter(|| {
                for (p, mu) in sample.iter().zip(&allocs) {
                    black_box(find_blocking_pair(p, mu));
                }
            })
        });
        group.bench_with_input(BenchmarkId::new("improving_cycle", n), &n, |b, _| {
            b.iter(|| {
                for (p, mu) in sample.iter().zip(&allocs) {
                    black_box(find_improving_cycle(p, mu));
                }
            })
        });
        group.bench_with_input(BenchmarkId::new("brute_force_dominator", n), &n, |b, _| {
            b.iter(|| {
                for (p, mu) in sample.iter().zip(&allocs) {
                    black_box(brute_force_dominator(p, mu).unwrap());
                }
            })
        });
        group.bench_with_input(BenchmarkId::new("ttc", n), &n, |b, _| {
            b.iter(|| {
                for p in &sample {
                    black_box(ttc(p));
                }
            })
        });
    }
    group.finish();
}

fn domains(c: &mut Criterion) {
    let order = LinearOrder::identity(10);
    c.bench_function("enumerate_single_peaked_m10", |b| {
        b.iter(|| black_box(enumerate_single_peaked(&order)))
    });
    let all = profiles(&DomainSpec::unrestricted(10), 1);
    c.bench_function("single_peaked_violation_m10", |b| {
        b.iter(|| {
            for p in all[0].prefs() {
                black_box(single_peaked_violation(p, &order));
            }
        })
    });
}

fn scans(c: &mut Criterion) {
    let mut group = c.benchmark_group("verify");
    group.sample_size(10);
    group.bench_function("sp_n4_exhaustive", |b| {
        b.iter(|| {
            verify_equivalence(
                &DomainSpec::single_peaked(4),
                Scope::Exhaustive,
                &VerifyOptions::default(),
            )
            .unwrap()
        })
    });
    group.finish();
}

criterion_group!(benches, efficiency_checks, domains, scans);
criterion_main!(benches);
