use std::collections::VecDeque;

use acluster_core::exact::complexity_polynomial;
use acluster_core::harness::exhaustive_distribution;
use acluster_core::noise::SignedGraph;
use acluster_core::oracle::{TruthOracle, UniformPartitionSampler};
use acluster_core::strategy::{is_chordal_graph, preserves_chordality, run, run_observed, RunOptions, StrategyKind};
use acluster_core::{all_partitions, stream_rng, AggregatedGraph, Partition, Query, QueryLog};
use num_bigint::BigUint;
use proptest::prelude::*;
use rand::Rng;

fn chordal_kind() -> impl Strategy<Value = StrategyKind> {
    prop_oneof![
        Just(StrategyKind::Clique),
        Just(StrategyKind::Universal),
        Just(StrategyKind::ChordalAny)
    ]
}

fn any_kind() -> impl Strategy<Value = StrategyKind> {
    prop::sample::select(StrategyKind::ALL.to_vec())
}

fn truth(n: usize, seed: u64) -> Partition {
    UniformPartitionSampler::new(n).unwrap().sample(&mut stream_rng(seed, 0))
}

/// Partitions of `0..n` consistent with `g`, by enumeration.
fn brute_realizations(g: &AggregatedGraph) -> usize {
    all_partitions(g.n())
        .into_iter()
        .filter(|p| {
            (0..g.n()).all(|u| {
                (0..g.n()).all(|v| match g.relation(u, v) {
                    Some(same) => p.same_block(u, v) == same,
                    None => true,
                })
            })
        })
        .count()
}

/// Prefix of a chordal-any run on `truth`, stopped after `steps` answers.
fn chordal_prefix(truth: &Partition, steps: usize, seed: u64) -> AggregatedGraph {
    let mut g = AggregatedGraph::new(truth.n()).unwrap();
    let mut s = StrategyKind::ChordalAny.build();
    let mut rng = stream_rng(seed, 3);
    for _ in 0..steps {
        match s.next_query(&g, &mut rng).unwrap() {
            Some(q) => {
                g.observe(q, truth.same_block(q.u, q.v)).unwrap();
            }
            None => break,
        }
    }
    g
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 200, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn chordal_strategies_stay_chordal(kind in chordal_kind(), n in 1usize..=11, seed in any::<u64>()) {
        let t = truth(n, seed);
        let mut s = kind.build();
        let mut rng = stream_rng(seed, 1);
        let (g, _) = run_observed(s.as_mut(), &mut TruthOracle { truth: &t }, n, &mut rng, None, |_, _, after| {
            assert!(is_chordal_graph(after));
            Ok(())
        }).unwrap();
        prop_assert_eq!(g.partition(), t);
    }

    #[test]
    fn every_strategy_recovers_truth(kind in any_kind(), n in 1usize..=40, seed in any::<u64>()) {
        let t = truth(n, seed);
        let mut s = kind.build();
        let stats = run(s.as_mut(), &mut TruthOracle { truth: &t }, n, &mut stream_rng(seed, 1), RunOptions::default()).unwrap();
        prop_assert_eq!(&stats.partition, &t);
        prop_assert_eq!(stats.positives, n - t.b());
        prop_assert!(stats.queries <= n * (n - 1) / 2);
    }

    #[test]
    fn separator_test_matches_recognition(n in 2usize..=12, seed in any::<u64>(), steps in 0usize..40) {
        let t = truth(n, seed);
        let g = chordal_prefix(&t, steps, seed);
        prop_assert!(is_chordal_graph(&g));
        let reps = g.reps();
        for (i, &a) in reps.iter().enumerate() {
            for &b in &reps[i + 1..] {
                if g.has_negative(a, b) {
                    continue;
                }
                let q = Query::new(a, b).unwrap();
                let mut h = g.clone();
                h.observe(q, false).unwrap();
                prop_assert_eq!(preserves_chordality(&g, q).unwrap(), is_chordal_graph(&h));
            }
        }
    }

    #[test]
    fn realizations_match_enumeration_and_shrink(n in 1usize..=7, seed in any::<u64>()) {
        let t = truth(n, seed);
        let mut g = AggregatedGraph::new(n).unwrap();
        let mut s = StrategyKind::Random.build();
        let mut rng = stream_rng(seed, 2);
        let mut last = g.count_realizations(12).unwrap();
        prop_assert_eq!(last.clone(), BigUint::from(brute_realizations(&g)));
        while let Some(q) = s.next_query(&g, &mut rng).unwrap() {
            g.observe(q, t.same_block(q.u, q.v)).unwrap();
            let now = g.count_realizations(12).unwrap();
            prop_assert_eq!(now.clone(), BigUint::from(brute_realizations(&g)));
            prop_assert!(now < last);
            last = now;
        }
        prop_assert_eq!(last, BigUint::from(1u32));
    }

    #[test]
    fn log_round_trip_replays(kind in any_kind(), n in 1usize..=30, seed in any::<u64>()) {
        let t = truth(n, seed);
        let mut s = kind.build();
        let stats = run(s.as_mut(), &mut TruthOracle { truth: &t }, n, &mut stream_rng(seed, 1), RunOptions::default()).unwrap();
        let text = stats.log.to_jsonl();
        let back = QueryLog::read_jsonl(n, text.as_bytes()).unwrap();
        prop_assert_eq!(back.answers(), stats.log.answers());
        prop_assert_eq!(AggregatedGraph::replay(&back).unwrap().partition(), t);
    }

    #[test]
    fn detection_agrees_with_replay(n in 2usize..=9, answers in prop::collection::vec((0usize..9, 0usize..9, any::<bool>()), 0..30)) {
        let mut log = QueryLog::new(n);
        for (u, v, pos) in answers {
            let (u, v) = (u % n, v % n);
            if u != v {
                log.record(Query::new(u, v).unwrap(), pos).unwrap();
            }
        }
        let g = SignedGraph::from_log(&log);
        prop_assert_eq!(g.detect_contradiction().is_none(), AggregatedGraph::replay(&log).is_ok());
    }

    #[test]
    fn detected_cycle_is_shortest(n in 2usize..=10, answers in prop::collection::vec((0usize..10, 0usize..10, any::<bool>()), 0..35)) {
        let mut log = QueryLog::new(n);
        for (u, v, pos) in answers {
            let (u, v) = (u % n, v % n);
            if u != v {
                log.record(Query::new(u, v).unwrap(), pos).unwrap();
            }
        }
        let g = SignedGraph::from_log(&log);
        let best = g
            .edges()
            .iter()
            .filter(|e| !e.positive)
            .filter_map(|e| positive_distance(&g, e.u, e.v).map(|d| d + 1))
            .min();
        match g.detect_contradiction() {
            None => prop_assert!(best.is_none()),
            Some(c) => {
                prop_assert_eq!(Some(c.len()), best);
                let last = g.edge(*c.edges.last().unwrap());
                prop_assert!(!last.positive);
                prop_assert!(c.edges[..c.len() - 1].iter().all(|&i| g.edge(i).positive));
            }
        }
    }

    #[test]
    fn chordal_any_seeds_share_distribution(n in 1usize..=6, seed in any::<u64>()) {
        prop_assert_eq!(exhaustive_distribution(StrategyKind::ChordalAny, n, seed).unwrap(), complexity_polynomial(n));
    }
}

/// BFS distance between `s` and `t` over positive edges.
fn positive_distance(g: &SignedGraph, s: usize, t: usize) -> Option<usize> {
    let mut dist = vec![usize::MAX; g.n()];
    dist[s] = 0;
    let mut queue = VecDeque::from([s]);
    while let Some(x) = queue.pop_front() {
        for e in g.edges().iter().filter(|e| e.positive && (e.u == x || e.v == x)) {
            let y = if e.u == x { e.v } else { e.u };
            if dist[y] == usize::MAX {
                dist[y] = dist[x] + 1;
                queue.push_back(y);
            }
        }
    }
    (dist[t] != usize::MAX).then_some(dist[t])
}

#[test]
fn core_count_is_n_minus_blocks_on_every_partition() {
    for n in 1..=6 {
        for t in all_partitions(n) {
            for kind in StrategyKind::ALL {
                let mut s = kind.build();
                let stats = run(
                    s.as_mut(),
                    &mut TruthOracle { truth: &t },
                    n,
                    &mut stream_rng(1, 0),
                    RunOptions {
                        classify: Some(&t),
                        ..Default::default()
                    },
                )
                .unwrap();
                let c = stats.classes.unwrap();
                assert_eq!(c.core, n - t.b());
                if kind.is_chordal() {
                    assert_eq!(c.excessive, 0, "{kind} on {t:?}");
                }
            }
        }
    }
}

#[test]
fn random_strategy_is_sometimes_excessive_and_never_better() {
    let chordal = complexity_polynomial(4).mean();
    let mut strict = false;
    for seed in 0..40 {
        let m = exhaustive_distribution(StrategyKind::Random, 4, seed).unwrap().mean();
        assert!(m >= chordal);
        strict |= m > chordal;
    }
    assert!(strict);
    let mut rng = stream_rng(11, 0);
    let mut excessive = 0;
    for _ in 0..200 {
        let t = truth(6, rng.random());
        let mut s = StrategyKind::Random.build();
        let stats = run(
            s.as_mut(),
            &mut TruthOracle { truth: &t },
            6,
            &mut rng,
            RunOptions {
                classify: Some(&t),
                ..Default::default()
            },
        )
        .unwrap();
        excessive += stats.classes.unwrap().excessive;
    }
    assert!(excessive > 0);
}
