//! Timings of the estimator, the dissimilarity builders and the clustering.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use edclust_core::baselines::BaselineSpec;
use edclust_core::energy::QuadratureGrid;
use edclust_core::*;

fn scalars(n: usize, seed: u64) -> Sample {
    let (panel, _) = build_experiment(&SimSpec::new(Scenario::Nonlinear16, n.max(10), seed)).unwrap();
    Sample::from_scalars(&panel.column(0)[..n]).unwrap()
}

fn vstat(c: &mut Criterion) {
    let mut group = c.benchmark_group("energy_distance_vstat");
    for n in [100, 400, 1600] {
        let (y, z) = (scalars(n, 1), scalars(n, 2));
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| energy_distance_vstat(black_box(&y), black_box(&z)).unwrap())
        });
    }
    group.finish();
}

fn quadrature(c: &mut Criterion) {
    let (y, z) = (scalars(50, 1), scalars(50, 2));
    c.bench_function("energy_distance_quadrature_1d/50", |b| {
        b.iter(|| energy_distance_quadrature_1d(black_box(&y), black_box(&z), QuadratureGrid::default()).unwrap())
    });
}

fn dissimilarity(c: &mut Criterion) {
    let (panel, _) = build_experiment(&SimSpec::new(Scenario::Nonlinear16, 200, 7)).unwrap();
    let mut group = c.benchmark_group("dissimilarity_nonlinear16_n200");
    group.sample_size(10);
    for h in [0, 1, 2] {
        group.bench_with_input(BenchmarkId::new("joint", h), &h, |b, &h| {
            b.iter(|| joint_dissimilarity_matrix(black_box(&panel), h).unwrap())
        });
    }
    group.bench_function("bivariate_sum/2", |b| {
        b.iter(|| bivariate_sum_dissimilarity_matrix(black_box(&panel), 2).unwrap())
    });
    let acf = BaselineSpec::new(BaselineMethod::Acf, 10, BaselineSpec::DEFAULT_P_WEIGHT).unwrap();
    group.bench_function("acf/10", |b| b.iter(|| baseline_dissimilarity_matrix(black_box(&panel), &acf).unwrap()));
    group.finish();
}

fn clustering(c: &mut Criterion) {
    let (panel, _) = build_experiment(&SimSpec::new(Scenario::Var40, 200, 7)).unwrap();
    let d = baseline_dissimilarity_matrix(&panel, &BaselineSpec::periodogram(BaselineMethod::IntPer)).unwrap();
    c.bench_function("agglomerate/40", |b| b.iter(|| agglomerate(black_box(&d)).unwrap()));
    let dend = agglomerate(&d).unwrap();
    c.bench_function("select_k/40", |b| b.iter(|| select_k(black_box(&dend), &d, 10).unwrap()));
}

criterion_group!(benches, vstat, quadrature, dissimilarity, clustering);
criterion_main!(benches);
