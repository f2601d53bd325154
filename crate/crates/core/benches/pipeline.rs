//! Parallel vs sequential paths over the same work: a leave-one-out sweep and
//! per-query retrieval on a paper-scale fixture.
//!
//! With `parallel` enabled the sequential path is rayon confined to one
//! thread; without it only the sequential numbers are produced.

use std::hint::black_box;
use std::sync::Arc;

use argon_core::eval::{sweep_matrix, EvalConfigGrid};
use argon_core::fixture::{generate, FixtureScale};
use argon_core::pipeline::{Engine, PipelineConfig, RankerKind};
use argon_core::prefilter::QueryClaim;
use argon_core::relevance::RelevanceSource;
use argon_core::represent::{ReprKind, SimKind};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn engine() -> Engine {
    let f = generate(2024, &FixtureScale::paper()).unwrap();
    Engine::new(f.corpus, RelevanceSource::Table(f.scores), Some(Arc::new(f.embeddings))).unwrap()
}

fn grid() -> EvalConfigGrid {
    EvalConfigGrid {
        alphas: vec![0.25, 0.5, 0.75],
        taus: vec![0.3, 0.5],
        representations: vec![ReprKind::ClaimSim, ReprKind::Bert],
        similarities: vec![SimKind::Cos],
        rankers: vec![RankerKind::BiasedCoreset, RankerKind::TopK],
        ks: vec![5],
        m_claims: vec![10],
        m_premises: vec![10],
    }
}

fn retrieve_all(e: &Engine, cfg: &PipelineConfig, queries: &[QueryClaim]) -> usize {
    queries
        .iter()
        .map(|q| e.retrieve(cfg, q).unwrap().result.items.len())
        .sum()
}

#[cfg(feature = "parallel")]
fn paths() -> Vec<(&'static str, rayon::ThreadPool)> {
    let n = std::thread::available_parallelism().map_or(1, |n| n.get());
    let pool = |t| rayon::ThreadPoolBuilder::new().num_threads(t).build().unwrap();
    vec![("sequential", pool(1)), ("parallel", pool(n))]
}

fn bench(c: &mut Criterion) {
    let e = engine();
    let base = PipelineConfig::default();
    let grid = grid();
    let configs = grid.expand(&base).unwrap();
    let ids = e.corpus.query_claim_ids().to_vec();
    let queries: Vec<QueryClaim> = ids
        .iter()
        .map(|q| QueryClaim::from_corpus(&e.corpus, q).unwrap())
        .collect();

    let mut g = c.benchmark_group("sweep");
    g.sample_size(10);
    #[cfg(feature = "parallel")]
    for (name, pool) in paths() {
        g.bench_function(BenchmarkId::new(name, configs.len()), |b| {
            b.iter(|| pool.install(|| black_box(sweep_matrix(&e, &configs, &ids, 5).unwrap())))
        });
    }
    #[cfg(not(feature = "parallel"))]
    g.bench_function(BenchmarkId::new("sequential", configs.len()), |b| {
        b.iter(|| black_box(sweep_matrix(&e, &configs, &ids, 5).unwrap()))
    });
    g.finish();

    let mut g = c.benchmark_group("retrieve");
    g.sample_size(20);
    #[cfg(feature = "parallel")]
    for (name, pool) in paths() {
        g.bench_function(BenchmarkId::new(name, queries.len()), |b| {
            b.iter(|| pool.install(|| black_box(retrieve_all(&e, &base, &queries))))
        });
    }
    #[cfg(not(feature = "parallel"))]
    g.bench_function(BenchmarkId::new("sequential", queries.len()), |b| {
        b.iter(|| black_box(retrieve_all(&e, &base, &queries)))
    });
    g.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);
