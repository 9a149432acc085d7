use std::hint::black_box;

use bbs_core::continuum::{apply_Ti_continuum, sample_brownian_with_drift, DriftSpec};
use bbs_core::random::{sample_iid, ColorLaw};
use bbs_core::{
    apply_Ti, apply_Ti_direct, build_simplex_basis, encode, run_carrier, Boundary, Configuration,
};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};

fn config(kappa: usize, len: i64) -> Configuration {
    let mut probs = vec![0.4 / kappa as f64; kappa + 1];
    probs[0] = 0.6;
    sample_iid(&ColorLaw::new(probs).unwrap(), 1, len, 1)
        .unwrap()
        .with_boundary(Boundary::FiniteSupport)
        .unwrap()
}

fn lattice(c: &mut Criterion) {
    let mut g = c.benchmark_group("apply_T1");
    for len in [1_000i64, 10_000, 100_000] {
        let cfg = config(3, len);
        let path = encode(&cfg);
        g.throughput(Throughput::Elements(len as u64));
        g.bench_with_input(BenchmarkId::new("pitman", len), &path, |b, p| {
            b.iter(|| apply_Ti(black_box(p), 1).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("direct", len), &cfg, |b, cfg| {
            b.iter(|| apply_Ti_direct(black_box(cfg), 1).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("carrier", len), &cfg, |b, cfg| {
            b.iter(|| run_carrier(black_box(cfg), 1).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("encode", len), &cfg, |b, cfg| {
            b.iter(|| encode(black_box(cfg)))
        });
    }
    g.finish();
}

fn continuum(c: &mut Criterion) {
    let spec = DriftSpec::new(2, vec![1.0, -0.5, -0.5]).unwrap();
    let basis = build_simplex_basis(2).unwrap();
    let path = sample_brownian_with_drift(&spec, 50.0, 0.01, 3).unwrap();
    c.bench_function("continuum_T1_10k_nodes", |b| {
        b.iter(|| apply_Ti_continuum(black_box(&path), &basis, 1).unwrap())
    });
}

criterion_group!(benches, lattice, continuum);
criterion_main!(benches);
