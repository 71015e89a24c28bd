use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use quadsense::channel::{ChannelKernel, RowSelection};
use quadsense::detection::estimate_pd;
use quadsense::entropy::{exact_mi_quadruplet_poisson, mutual_information, poisson_entropy_rate};
use quadsense::{ChannelKind, Hypothesis, Scheme, SeededRng};
use quadsense_bench::{dense_allocation, gaussian_params, poisson_params, scheme_allocation};

fn log_mixture(c: &mut Criterion) {
    let mut group = c.benchmark_group("log_mixture_15_rows");
    for (channel, params) in [(ChannelKind::Poisson, poisson_params()), (ChannelKind::Gaussian, gaussian_params())] {
        let alloc = dense_allocation();
        let kernel = ChannelKernel::new(channel, &alloc, &params, RowSelection::All);
        let mut rng = SeededRng::new(1);
        let mut y = [0.0; 15];
        kernel.sample_into(Hypothesis::new(9).unwrap(), &mut rng, &mut y);
        group.bench_function(BenchmarkId::from_parameter(channel), |b| b.iter(|| kernel.log_mixture(black_box(&y))));
    }
    group.finish();
}

fn mutual_information_schemes(c: &mut Criterion) {
    let mut group = c.benchmark_group("mutual_information_10k");
    group.sample_size(10);
    for scheme in [Scheme::Singlets, Scheme::Pairs, Scheme::Quadruplet] {
        let alloc = scheme_allocation(scheme, 1.0);
        group.bench_function(BenchmarkId::new("poisson", scheme.label()), |b| {
            b.iter(|| {
                mutual_information(ChannelKind::Poisson, &alloc, &poisson_params(), 10_000, &SeededRng::new(3)).unwrap()
            })
        });
    }
    group.finish();
}

fn detection(c: &mut Criterion) {
    let alloc = scheme_allocation(Scheme::Triplets, 1.0);
    let mut group = c.benchmark_group("estimate_pd_10k");
    group.sample_size(10);
    group.bench_function("gaussian_triplets", |b| {
        b.iter(|| estimate_pd(ChannelKind::Gaussian, &alloc, &gaussian_params(), 10_000, &SeededRng::new(4)).unwrap())
    });
    group.finish();
}

fn exact_sums(c: &mut Criterion) {
    c.bench_function("poisson_entropy_rate_500", |b| b.iter(|| poisson_entropy_rate(black_box(500.0))));
    c.bench_function("exact_mi_quadruplet_T2", |b| {
        b.iter(|| exact_mi_quadruplet_poisson(&poisson_params(), black_box(2.0)))
    });
}

criterion_group!(benches, log_mixture, mutual_information_schemes, detection, exact_sums);
criterion_main!(benches);
