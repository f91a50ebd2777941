use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use osse_core::attacks::{
    binary_vector, cluster_patterns, cooccurrence_aux, cooccurrence_observed, graph_matching_attack, ikk_anneal, solve_lap, AnnealConfig,
    AuxMode, GraphMatchConfig, KMeansConfig,
};
use osse_core::corpus::{gen_synthetic_corpus, Dataset, FrequencyLaw, SyntheticSpec};

/// Deterministic cost matrix from a 64-bit LCG.
fn lcg_matrix(rows: usize, cols: usize) -> Vec<Vec<f64>> {
    let mut s = 0x2545_f491_4f6c_dd1du64;
    (0..rows)
        .map(|_| {
            (0..cols)
                .map(|_| {
                    s = s.wrapping_mul(6_364_136_223_846_793_005).wrapping_add(1_442_695_040_888_963_407);
                    (s >> 11) as f64 / (1u64 << 53) as f64
                })
                .collect()
        })
        .collect()
}

fn corpus(universe: usize) -> Dataset {
    gen_synthetic_corpus(&SyntheticSpec { n: 1000, universe, law: FrequencyLaw::Zipf, freqmax: 400, sizemax: None, seed: 2 }).unwrap()
}

fn bench_lap(c: &mut Criterion) {
    let mut g = c.benchmark_group("lap");
    for k in [50usize, 200] {
        let cost = lcg_matrix(k, k);
        g.bench_with_input(BenchmarkId::from_parameter(k), &k, |b, _| b.iter(|| solve_lap(black_box(&cost))));
    }
    g.finish();
}

fn bench_qap(c: &mut Criterion) {
    let mut g = c.benchmark_group("graph_matching");
    g.sample_size(10);
    for u in [30usize, 100] {
        let ds = corpus(u);
        let aux = cooccurrence_aux(&ds, AuxMode::Naive);
        let obs = cooccurrence_observed(&ds.postings(), ds.len());
        g.bench_with_input(BenchmarkId::from_parameter(u), &u, |b, _| {
            b.iter(|| graph_matching_attack(&obs, &aux, &GraphMatchConfig::default(), 5).unwrap())
        });
    }
    g.finish();
}

fn bench_anneal(c: &mut Criterion) {
    let ds = corpus(50);
    let aux = cooccurrence_aux(&ds, AuxMode::Naive);
    let obs = cooccurrence_observed(&ds.postings(), ds.len());
    let known = vec![None; obs.size()];
    let mut g = c.benchmark_group("ikk_anneal");
    g.sample_size(10);
    g.bench_function("universe=50", |b| b.iter(|| ikk_anneal(&obs, &aux, &known, &AnnealConfig::default(), 6).unwrap()));
    g.finish();
}

fn bench_kmeans(c: &mut Criterion) {
    let ds = corpus(50);
    let points: Vec<_> = ds.postings().iter().flat_map(|p| std::iter::repeat_n(binary_vector(p), 4)).collect();
    let mut g = c.benchmark_group("kmeans");
    g.sample_size(10);
    g.bench_function("200x1000,k=50", |b| b.iter(|| cluster_patterns(&points, ds.len(), 50, &KMeansConfig::default(), 7).unwrap()));
    g.finish();
}

criterion_group!(benches, bench_lap, bench_qap, bench_anneal, bench_kmeans);
criterion_main!(benches);
