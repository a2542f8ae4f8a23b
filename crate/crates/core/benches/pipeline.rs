//! Benchmarks for the hot paths: feature matrix assembly, tensor
//! contractions, and a full multi-start solve.
//!
//! Build twice to compare the execution modes:
//!
//! ```text
//! cargo bench -p rkbs-svm                          # parallel (default)
//! cargo bench -p rkbs-svm --no-default-features    # sequential
//! ```
//!
//! Criterion stores baselines under target/criterion, so running the second
//! command after the first reports the relative change.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use nalgebra::DVector;
use std::hint::black_box;

use rkbs_svm::data::generate_overlapping_squares;
use rkbs_svm::kernels::{build_feature_matrix, KernelSpec};
use rkbs_svm::loss::builtin;
use rkbs_svm::solver::{multi_start_solve, SolverConfig};
use rkbs_svm::tensor::TensorHandle;

fn bench_feature_matrix(crit: &mut Criterion) {
    let kernel = KernelSpec::min(2);
    let mut group = crit.benchmark_group("feature_matrix");
    for &n in &[60usize, 300] {
        let (train, _) = generate_overlapping_squares(n, 10, 5).unwrap();
        group.bench_with_input(BenchmarkId::new("build", n), &n, |b, _| {
            b.iter(|| build_feature_matrix(black_box(&kernel), 64, train.points()).unwrap())
        });
    }
    group.finish();
}

fn bench_contractions(crit: &mut Criterion) {
    let kernel = KernelSpec::min(2);
    let (train, _) = generate_overlapping_squares(300, 10, 5).unwrap();
    let fm = build_feature_matrix(&kernel, 64, train.points()).unwrap();
    let mut group = crit.benchmark_group("contractions");
    for &m in &[1usize, 2] {
        let t = TensorHandle::from_feature_matrix(&fm, m).unwrap();
        let c = DVector::from_fn(300, |i, _| ((i + 1) as f64 * 0.37).sin());
        group.bench_with_input(BenchmarkId::new("full", m), &m, |b, _| {
            b.iter(|| t.contract_full(black_box(&c)).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("grad", m), &m, |b, _| {
            b.iter(|| t.contract_2m_minus_1(black_box(&c)).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("curvature", m), &m, |b, _| {
            b.iter(|| t.contract_2m_minus_2(black_box(&c)).unwrap())
        });
    }
    group.finish();
}

fn bench_multi_start(crit: &mut Criterion) {
    let kernel = KernelSpec::min(2);
    let (train, _) = generate_overlapping_squares(60, 10, 5).unwrap();
    let fm = build_feature_matrix(&kernel, 32, train.points()).unwrap();
    let t = TensorHandle::from_feature_matrix(&fm, 2).unwrap();
    let loss = builtin::hinge();
    let config = SolverConfig {
        m: 2,
        lambda: 0.01,
        beta: 1.0,
        eps2: 1e-4,
        max_outer: 40,
        restarts: 4,
        init_lo: 0.0,
        init_hi: 1.0,
        ..SolverConfig::default()
    };
    let mut group = crit.benchmark_group("solver");
    group.sample_size(10);
    group.bench_function("multi_start_60pts", |b| {
        b.iter(|| multi_start_solve(&t, &loss, train.labels(), black_box(&config)).unwrap())
    });
    group.finish();
}

criterion_group!(
    benches,
    bench_feature_matrix,
    bench_contractions,
    bench_multi_start
);
criterion_main!(benches);
