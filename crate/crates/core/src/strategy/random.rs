use rand::{Rng, RngCore};

use super::Strategy;
use crate::error::Result;
use crate::graph::AggregatedGraph;
use crate::partition::Query;

/// Uniform choice among the item pairs whose relation is unknown.
#[derive(Debug, Clone, Default)]
pub struct RandomPairs;

/// Rejection attempts before falling back to exact weighted sampling.
const REJECTION_TRIES: usize = 256;

impl RandomPairs {
    pub fn new() -> Self {
        RandomPairs
    }
}

/// Draws a uniformly random unknown item pair, or `None` when resolved.
pub fn uniform_unknown_pair(g: &AggregatedGraph, rng: &mut dyn RngCore) -> Option<Query> {
    let n = g.n();
    if n < 2 || g.is_resolved() {
        return None;
    }
    for _ in 0..REJECTION_TRIES {
        let u = rng.random_range(0..n);
        let v = rng.random_range(0..n - 1);
        let v = if v >= u { v + 1 } else { v };
        if !g.is_known(u, v) {
            return Some(Query { u, v });
        }
    }
    // Each super-vertex a carries size(a) * (items in unknown relation to a)
    // ordered pairs; pick a, then a partner super-vertex, then items.
    let reps = g.reps();
    let weights: Vec<u64> = reps
        .iter()
        .map(|&a| (g.size(a) * (n - g.size(a) - g.neighbor_mass(a))) as u64)
        .collect();
    let a = reps[pick_weighted(&weights, rng)];
    let partners: Vec<usize> = reps
        .iter()
        .copied()
        .filter(|&b| b != a && !g.has_negative(a, b))
        .collect();
    let pw: Vec<u64> = partners.iter().map(|&b| g.size(b) as u64).collect();
    let b = partners[pick_weighted(&pw, rng)];
    let ma = g.members(a);
    let mb = g.members(b);
    let u = ma[rng.random_range(0..ma.len())];
    let v = mb[rng.random_range(0..mb.len())];
    Some(Query { u, v })
}

fn pick_weighted(weights: &[u64], rng: &mut dyn RngCore) -> usize {
    let total: u64 = weights.iter().sum();
    let mut x = rng.random_range(0..total);
    for (i, &w) in weights.iter().enumerate() {
        if x < w {
            return i;
        }
        x -= w;
    }
    unreachable!("weights exhausted")
}

/// Uniform choice among the unknown super-vertex pairs.
///
/// Every current cluster counts once regardless of its size. This is the
/// process whose cost the asymptotic random-algorithm formula describes;
/// [`RandomPairs`] weights clusters by their size instead.
#[derive(Debug, Clone, Default)]
pub struct RandomBlocks;

impl RandomBlocks {
    pub fn new() -> Self {
        RandomBlocks
    }
}

/// Item draws spent looking for one super-vertex before enumerating.
const BLOCK_DRAWS: usize = 4096;

/// A uniformly random super-vertex: an item draw accepted with probability `1/size`.
fn uniform_block(g: &AggregatedGraph, rng: &mut dyn RngCore) -> Option<usize> {
    for _ in 0..BLOCK_DRAWS {
        let u = rng.random_range(0..g.n());
        let size = g.size(u);
        if size == 1 || rng.random_range(0..size) == 0 {
            return Some(g.rep(u));
        }
    }
    None
}

/// Draws a uniformly random pair of super-vertices with unknown relation,
/// as representatives, or `None` when resolved.
pub fn uniform_unknown_block_pair(g: &AggregatedGraph, rng: &mut dyn RngCore) -> Option<Query> {
    if g.n() < 2 || g.is_resolved() {
        return None;
    }
    for _ in 0..REJECTION_TRIES {
        let (Some(a), Some(b)) = (uniform_block(g, rng), uniform_block(g, rng)) else {
            break;
        };
        if a != b && !g.has_negative(a, b) {
            return Some(Query { u: a.max(b), v: a.min(b) });
        }
    }
    let reps = g.reps();
    let mut open = Vec::new();
    for (i, &a) in reps.iter().enumerate() {
        for &b in &reps[i + 1..] {
            if !g.has_negative(a, b) {
                open.push(Query { u: b, v: a });
            }
        }
    }
    Some(open[rng.random_range(0..open.len())])
}

impl Strategy for RandomBlocks {
    fn name(&self) -> &'static str {
        "random-blocks"
    }

    fn next_query(&mut self, g: &AggregatedGraph, rng: &mut dyn RngCore) -> Result<Option<Query>> {
        Ok(uniform_unknown_block_pair(g, rng))
    }
}

impl Strategy for RandomPairs {
    fn name(&self) -> &'static str {
        "random"
    }

    fn next_query(&mut self, g: &AggregatedGraph, rng: &mut dyn RngCore) -> Result<Option<Query>> {
        Ok(uniform_unknown_pair(g, rng))
    }
}
