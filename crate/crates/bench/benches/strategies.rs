use acluster_bench::{categorical_truth, uniform_truth};
use acluster_core::noise::{run_robust, RedundancyPlan, RobustEngine};
use acluster_core::oracle::TruthOracle;
use acluster_core::strategy::{chordal_candidates, is_chordal_graph};
use acluster_core::{run, stream_rng, AggregatedGraph, RunOptions, StrategyKind};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

fn strategies(c: &mut Criterion) {
    let mut g = c.benchmark_group("run");
    g.sample_size(20);
    let truth = categorical_truth(&[0.5, 0.3, 0.2], 400, 1);
    for kind in StrategyKind::ALL {
        g.bench_with_input(BenchmarkId::new(kind.name(), truth.n()), &truth, |b, t| {
            b.iter(|| {
                let mut s = kind.build();
                let stats = run(s.as_mut(), &mut TruthOracle { truth: t }, t.n(), &mut stream_rng(2, 0), RunOptions::default())
                    .unwrap();
                black_box(stats.queries)
            })
        });
    }
    g.finish();
}

fn chordality(c: &mut Criterion) {
    let truth = uniform_truth(60, 3);
    let mut graph = AggregatedGraph::new(60).unwrap();
    let mut s = StrategyKind::ChordalAny.build();
    let mut rng = stream_rng(4, 0);
    for _ in 0..120 {
        match s.next_query(&graph, &mut rng).unwrap() {
            Some(q) => {
                graph.observe(q, truth.same_block(q.u, q.v)).unwrap();
            }
            None => break,
        }
    }
    c.bench_function("is_chordal/60", |b| b.iter(|| black_box(is_chordal_graph(&graph))));
    c.bench_function("chordal_candidates/60", |b| b.iter(|| black_box(chordal_candidates(&graph).len())));
}

fn robust(c: &mut Criterion) {
    let truth = categorical_truth(&[0.25, 0.25, 0.25, 0.25], 500, 5);
    let mut g = c.benchmark_group("robust");
    g.sample_size(10);
    g.bench_function("clique-r5/500", |b| {
        b.iter(|| {
            let plan = RedundancyPlan::new(5).unwrap();
            let mut e = RobustEngine::new(500, StrategyKind::Clique.build(), Some(plan), 6).unwrap();
            black_box(run_robust(&mut e, &mut TruthOracle { truth: &truth }).unwrap().queries)
        })
    });
    g.finish();
}

criterion_group!(benches, strategies, chordality, robust);
criterion_main!(benches);
