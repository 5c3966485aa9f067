use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use hmprate::family::ParametrizedFamily;
use hmprate::{
    entropy_derivative_mc, entropy_rate_exact, entropy_rate_mc_with, entropy_series, isi_edge_optimizer, isi_graph, FiniteStateChannel, MarkovChain,
    PolynomialFamily,
};

fn family() -> PolynomialFamily {
    PolynomialFamily::bsc(MarkovChain::two_state(0.9, 0.5).unwrap(), &[0, 1]).unwrap()
}

fn entropy(c: &mut Criterion) {
    let model = family().model_at(0.2).unwrap();
    c.bench_function("entropy_mc_100k", |b| b.iter(|| entropy_rate_mc_with(black_box(&model), 100_000, 500, 7).unwrap()));
    c.bench_function("entropy_exact_12", |b| b.iter(|| entropy_rate_exact(black_box(&model), 12).unwrap()));
}

fn derivative(c: &mut Criterion) {
    let f = family();
    let mut g = c.benchmark_group("derivative");
    g.sample_size(10);
    g.bench_function("blackwell_2k", |b| b.iter(|| entropy_derivative_mc(black_box(&f), 0.2, 2_000, Some(200), 7).unwrap()));
    g.finish();
}

fn series(c: &mut Criterion) {
    let f = family();
    c.bench_function("series_bsc", |b| b.iter(|| entropy_series(black_box(&f)).unwrap()));
}

fn isi(c: &mut Criterion) {
    // Four-state shift register over two inputs with uneven means.
    let next: Vec<usize> = (0..4).flat_map(|s| (0..2).map(move |x| (2 * s + x) % 4)).collect();
    let means = vec![1.0, -0.7, 0.3, -1.2, 0.9, 0.1, -0.4, 0.6];
    let channel = FiniteStateChannel::isi(4, 2, next, means, 1.0).unwrap();
    let (graph, w) = isi_graph(&channel).unwrap();
    c.bench_function("isi_optimizer", |b| b.iter(|| isi_edge_optimizer(black_box(&graph), &w).unwrap()));
}

criterion_group!(benches, entropy, derivative, series, isi);
criterion_main!(benches);
