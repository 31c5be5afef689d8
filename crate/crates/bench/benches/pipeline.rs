use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use ddm_core::simulator::{simulate_paths, PathEngine};
use ddm_core::{
    estimate, run_test, simulate_dataset, Boundary, Dataset, DdmParameters, EstimatorConfig, ParametricBoundary,
    SimConfig, TestConfig, DATA_STREAM,
};

fn sample(n: usize) -> Dataset {
    let boundary = Boundary::parametric(ParametricBoundary::Hyperbolic { level: 1.0, rate: 0.5 }).unwrap();
    simulate_dataset(DdmParameters::new(0.5).unwrap(), &boundary, n, &SimConfig::default().with_seed(1))
        .unwrap()
        .dataset
}

fn paths(c: &mut Criterion) {
    let boundary = Boundary::constant(1.0).unwrap();
    let engine = PathEngine::new(0.5, &boundary, &SimConfig::default()).unwrap();
    c.bench_function("simulate 1000 paths", |b| {
        b.iter(|| simulate_paths(&engine, black_box(7), DATA_STREAM, 1000))
    });
}

fn fit(c: &mut Criterion) {
    let data = sample(2000);
    let config = EstimatorConfig::default();
    c.bench_function("estimate n=2000", |b| b.iter(|| estimate(black_box(&data), &config).unwrap()));
}

fn test(c: &mut Criterion) {
    let data = sample(2000);
    let config = TestConfig {
        simulations: 2000,
        ..TestConfig::default()
    };
    let mut group = c.benchmark_group("specification test");
    group.sample_size(10);
    group.bench_function("n=2000 S=2000", |b| b.iter(|| run_test(black_box(&data), &config).unwrap()));
    group.finish();
}

criterion_group!(benches, paths, fit, test);
criterion_main!(benches);
