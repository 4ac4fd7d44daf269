use std::hint::black_box;

use arbsim_core::arbitrage::{numeric_optimal_flashloan, optimal_flashloan};
use arbsim_core::experiments::run_single;
use arbsim_core::feepolicy::optimal_fee_exact;
use arbsim_core::hitting::first_hit;
use arbsim_core::{
    arbitrage_step, AdaptiveParams, ExperimentConfig, FeeLedger, FeePolicy, FeeSchedule, GbmParams,
    PoolState, ThresholdSpec, WalkParams,
};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn sizing(c: &mut Criterion) {
    let pool = PoolState::new(15_000.0, 15_000.0).unwrap();
    let fees = FeeSchedule::symmetric(0.003);
    let mut g = c.benchmark_group("sizing");
    g.bench_function("closed_form", |b| {
        b.iter(|| optimal_flashloan(black_box(1.02), 0.003, 0.0, black_box(15_000.0)))
    });
    g.bench_function("golden_section", |b| {
        b.iter(|| numeric_optimal_flashloan(black_box(&pool), black_box(1.02), &fees))
    });
    g.bench_function("optimal_fee_exact", |b| {
        b.iter(|| optimal_fee_exact(black_box(1.02), 15_000.0))
    });
    g.finish();
}

fn step(c: &mut Criterion) {
    let fees = FeeSchedule::symmetric(0.003);
    c.bench_function("arbitrage_step", |b| {
        b.iter(|| {
            let mut pool = PoolState::new(15_000.0, 15_000.0).unwrap();
            let mut ledger = FeeLedger::default();
            arbitrage_step(
                &mut pool,
                &mut ledger,
                black_box(1.01),
                Default::default(),
                &fees,
            )
        })
    });
}

fn runs(c: &mut Criterion) {
    let mut g = c.benchmark_group("run_single");
    g.sample_size(20);
    let config = ExperimentConfig {
        gbm: GbmParams::new(1.0, 0.0, 0.001, 1000, 0),
        ..ExperimentConfig::default()
    };
    for (name, policy) in [
        ("static", FeePolicy::StaticSymmetric { fee: 0.003 }),
        (
            "adaptive",
            FeePolicy::DirectionalAdaptive(AdaptiveParams::default()),
        ),
    ] {
        g.bench_with_input(BenchmarkId::from_parameter(name), &policy, |b, p| {
            b.iter(|| run_single(&config, p, black_box(7)))
        });
    }
    g.finish();
}

fn hitting(c: &mut Criterion) {
    let mut g = c.benchmark_group("first_hit");
    for width in [0.1, 0.4] {
        let spec = ThresholdSpec::symmetric(width);
        g.bench_with_input(BenchmarkId::from_parameter(width), &spec, |b, spec| {
            let mut seed = 0u64;
            b.iter(|| {
                seed += 1;
                first_hit(&WalkParams::new(1.0, 0.02, 0.5, 0, seed), spec)
            })
        });
    }
    g.finish();
}

criterion_group!(benches, sizing, step, runs, hitting);
criterion_main!(benches);
