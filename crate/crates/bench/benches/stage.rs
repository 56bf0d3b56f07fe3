use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use pricelab::equilibrium::{iterated_dominance, stackelberg_bertrand_exact, stackelberg_stage};
use pricelab::{MarketModel, Seller};

fn commitment(c: &mut Criterion) {
    let mut g = c.benchmark_group("stackelberg_stage");
    g.sample_size(10);
    for k in [20, 50, 100] {
        let m = MarketModel::bertrand(k).unwrap();
        g.bench_with_input(BenchmarkId::new("bertrand", k), &m, |b, m| {
            b.iter(|| stackelberg_stage(black_box(m), Seller::One).unwrap())
        });
    }
    let m = MarketModel::logit(20, 40.0).unwrap();
    g.bench_function("logit/20", |b| {
        b.iter(|| stackelberg_stage(black_box(&m), Seller::One).unwrap())
    });
    g.finish();
}

fn exact(c: &mut Criterion) {
    let mut g = c.benchmark_group("stackelberg_exact");
    g.sample_size(10);
    g.bench_function("bertrand/10", |b| {
        b.iter(|| stackelberg_bertrand_exact(black_box(10)).unwrap())
    });
    g.finish();
}

fn dominance(c: &mut Criterion) {
    let m = MarketModel::bertrand(100).unwrap();
    c.bench_function("iterated_dominance/100", |b| {
        b.iter(|| iterated_dominance(black_box(&m)).unwrap())
    });
}

criterion_group!(benches, commitment, exact, dominance);
criterion_main!(benches);
