//! Query-selection strategies and the run loop.

pub mod chordal;
pub mod chordal_any;
pub mod classify;
pub mod clique;
pub mod random;
pub mod universal;

use std::fmt;
use std::str::FromStr;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{AggregatedGraph, EXHAUSTIVE_LIMIT};
use crate::oracle::Oracle;
use crate::partition::{Answer, Partition, Query, QueryLog};

pub use chordal::{is_chordal, is_chordal_graph, preserves_chordality, preserves_chordality_bits};
pub use chordal_any::{chordal_candidates, ChordalAny};
pub use classify::{classify_query, ClassCounts, QueryClass};
pub use clique::Clique;
pub use random::{uniform_unknown_block_pair, uniform_unknown_pair, RandomBlocks, RandomPairs};
pub use universal::Universal;

/// Chooses the next query from the current knowledge state.
///
/// Strategies may cache progress between calls but must accept any graph:
/// they only ask about pairs whose relation is unknown and return `None`
/// exactly when the graph is resolved.
pub trait Strategy: Send {
    fn name(&self) -> &'static str;

    fn next_query(&mut self, g: &AggregatedGraph, rng: &mut dyn RngCore) -> Result<Option<Query>>;

    /// Drops cached progress, e.g. after answers were corrected.
    fn reset(&mut self) {}
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StrategyKind {
    Clique,
    Universal,
    ChordalAny,
    Random,
    RandomBlocks,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 5] = [
        StrategyKind::Clique,
        StrategyKind::Universal,
        StrategyKind::ChordalAny,
        StrategyKind::Random,
        StrategyKind::RandomBlocks,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StrategyKind::Clique => "clique",
            StrategyKind::Universal => "universal",
            StrategyKind::ChordalAny => "chordal-any",
            StrategyKind::Random => "random",
            StrategyKind::RandomBlocks => "random-blocks",
        }
    }

    /// Whether every aggregated graph along every run stays chordal.
    pub fn is_chordal(self) -> bool {
        !matches!(self, StrategyKind::Random | StrategyKind::RandomBlocks)
    }

    pub fn build(self) -> Box<dyn Strategy> {
        match self {
            StrategyKind::Clique => Box::new(Clique::new()),
            StrategyKind::Universal => Box::new(Universal::new()),
            StrategyKind::ChordalAny => Box::new(ChordalAny::new()),
            StrategyKind::Random => Box::new(RandomPairs::new()),
            StrategyKind::RandomBlocks => Box::new(RandomBlocks::new()),
        }
    }
}

impl FromStr for StrategyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        StrategyKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::UnknownStrategy(s.to_string()))
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Builds a strategy from its name.
pub fn make_strategy(name: &str) -> Result<Box<dyn Strategy>> {
    Ok(name.parse::<StrategyKind>()?.build())
}

/// The lexicographically first unknown pair of representatives.
pub(crate) fn first_unknown_pair(g: &AggregatedGraph) -> Option<Query> {
    if g.is_resolved() {
        return None;
    }
    let reps = g.reps();
    for (i, &a) in reps.iter().enumerate() {
        for &b in &reps[i + 1..] {
            if !g.has_negative(a, b) {
                return Some(Query { u: b, v: a });
            }
        }
    }
    None
}

/// Safety valve on run length: ten times the number of pairs.
pub fn default_budget(n: usize) -> usize {
    10 * n * n.saturating_sub(1) / 2
}

/// Drives a strategy against an oracle until resolution, calling
/// `observe(before, answer, after)` for every answer.
pub fn run_observed<F>(
    strategy: &mut dyn Strategy,
    oracle: &mut dyn Oracle,
    n: usize,
    rng: &mut dyn RngCore,
    budget: Option<usize>,
    mut observe: F,
) -> Result<(AggregatedGraph, QueryLog)>
where
    F: FnMut(&AggregatedGraph, &Answer, &AggregatedGraph) -> Result<()>,
{
    let budget = budget.unwrap_or_else(|| default_budget(n));
    let mut g = AggregatedGraph::new(n)?;
    let mut log = QueryLog::new(n);
    while let Some(q) = strategy.next_query(&g, rng)? {
        if log.len() >= budget {
            return Err(Error::BudgetExhausted(budget));
        }
        let positive = oracle.answer(q);
        let answer = log.record(q, positive)?;
        let before = g.clone();
        g.apply_answer(&answer)?;
        observe(&before, &answer, &g)?;
    }
    Ok((g, log))
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions<'a> {
    /// Classify every query against this truth (small n only).
    pub classify: Option<&'a Partition>,
    pub budget: Option<usize>,
    /// Super-vertex bound for classification; defaults to [`EXHAUSTIVE_LIMIT`].
    pub limit: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct RunStats {
    pub queries: usize,
    pub positives: usize,
    pub classes: Option<ClassCounts>,
    pub partition: Partition,
    pub log: QueryLog,
}

/// Runs `strategy` against `oracle` on `n` items.
pub fn run(
    strategy: &mut dyn Strategy,
    oracle: &mut dyn Oracle,
    n: usize,
    rng: &mut dyn RngCore,
    opts: RunOptions<'_>,
) -> Result<RunStats> {
    let limit = opts.limit.unwrap_or(EXHAUSTIVE_LIMIT);
    let mut counts = opts.classify.map(|_| ClassCounts::default());
    let (g, log) = if let Some(truth) = opts.classify {
        let mut g = AggregatedGraph::new(n)?;
        let mut log = QueryLog::new(n);
        let budget = opts.budget.unwrap_or_else(|| default_budget(n));
        while let Some(q) = strategy.next_query(&g, rng)? {
            if log.len() >= budget {
                return Err(Error::BudgetExhausted(budget));
            }
            let positive = oracle.answer(q);
            let class = classify_query(&g, q, positive, truth, limit)?;
            counts.as_mut().expect("classifying").add(class);
            let answer = log.record(q, positive)?;
            g.apply_answer(&answer)?;
        }
        (g, log)
    } else {
        let mut g = AggregatedGraph::new(n)?;
        let mut log = QueryLog::new(n);
        let budget = opts.budget.unwrap_or_else(|| default_budget(n));
        while let Some(q) = strategy.next_query(&g, rng)? {
            if log.len() >= budget {
                return Err(Error::BudgetExhausted(budget));
            }
            let answer = log.record(q, oracle.answer(q))?;
            g.apply_answer(&answer)?;
        }
        (g, log)
    };
    let positives = log.answers().iter().filter(|a| a.positive).count();
    Ok(RunStats {
        queries: log.len(),
        positives,
        classes: counts,
        partition: g.partition(),
        log,
    })
}
