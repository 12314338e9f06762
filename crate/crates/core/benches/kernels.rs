//! Tiled kernels on one worker thread against the full rayon pool. Built
//! without the `parallel` feature both variants run the sequential path.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rayon::ThreadPoolBuilder;
use spatial_arma::noise::NoiseSpec;
use spatial_arma::poly::{IndexBox, ModelSpec};
use spatial_arma::simulator::{linear_field, sample_noise};
use spatial_arma::spectral::{causal_alpha, fourier_psi, l2_spectral_sequence_from, TorusGrid};
use spatial_arma::Complex64;

fn pools() -> Vec<(&'static str, rayon::ThreadPool)> {
    let all = rayon::current_num_threads();
    vec![
        ("sequential", ThreadPoolBuilder::new().num_threads(1).build().unwrap()),
        ("parallel", ThreadPoolBuilder::new().num_threads(all).build().unwrap()),
    ]
}

fn first_order() -> ModelSpec {
    ModelSpec::first_order(0.2, 0.2, 0.1).unwrap()
}

fn bench_quadrature(c: &mut Criterion) {
    let ar: Vec<(Vec<i64>, Complex64)> = (0..3)
        .map(|i| {
            let mut k = vec![0i64; 3];
            k[i] = 1;
            (k, Complex64::new(0.3, 0.0))
        })
        .collect();
    let model = ModelSpec::new(3, ar, vec![]).unwrap();
    let mut g = c.benchmark_group("l2_quadrature_d3_32_to_128");
    g.sample_size(10);
    for (name, pool) in pools() {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| pool.install(|| l2_spectral_sequence_from(&model, 32, 2).unwrap()))
        });
    }
    g.finish();
}

fn bench_fourier_psi(c: &mut Criterion) {
    let model = first_order();
    let grid = TorusGrid::cube(2, 512).unwrap();
    let keep = IndexBox::symmetric(2, 16);
    let mut g = c.benchmark_group("fourier_psi_512x512");
    g.sample_size(10);
    for (name, pool) in pools() {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| pool.install(|| fourier_psi(&model, &grid, &keep).unwrap()))
        });
    }
    g.finish();
}

fn bench_simulation(c: &mut Criterion) {
    let model = first_order();
    let alpha = causal_alpha(&model, &[30, 30]).unwrap();
    let noise = NoiseSpec::gaussian(1.0);
    let window = IndexBox::new(vec![0, 0], vec![127, 127]).unwrap();
    let mut g = c.benchmark_group("simulation_128x128");
    g.sample_size(10);
    for (name, pool) in pools() {
        g.bench_function(BenchmarkId::new("noise", name), |b| {
            b.iter(|| pool.install(|| sample_noise(&noise, &window, 1)))
        });
        g.bench_function(BenchmarkId::new("linear_field_n30", name), |b| {
            b.iter(|| pool.install(|| linear_field(&alpha, &noise, &window, 30, 1).unwrap()))
        });
    }
    g.finish();
}

criterion_group!(kernels, bench_quadrature, bench_fourier_psi, bench_simulation);
criterion_main!(kernels);
