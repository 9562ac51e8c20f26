//! Chordality predicates on the negative graph.

use crate::bitset::{BitGraph, Bits};
use crate::error::{Error, Result};
use crate::graph::AggregatedGraph;
use crate::partition::Query;

/// True iff adding the edge `u`-`v` to the chordal graph `g` keeps it chordal:
/// the common neighborhood of `u` and `v` separates them.
pub fn preserves_chordality_bits(g: &BitGraph, u: usize, v: usize) -> bool {
    let common = g.neighbors(u).intersect(g.neighbors(v));
    !g.reachable_avoiding(u, &common).contains(v)
}

/// [`preserves_chordality_bits`] for a useful query on the aggregated graph.
pub fn preserves_chordality(g: &AggregatedGraph, q: Query) -> Result<bool> {
    if g.is_known(q.u, q.v) {
        return Err(Error::RedundantQuery(q));
    }
    let (reps, bits) = g.negative_graph();
    let index = |item: usize| reps.binary_search(&g.rep(item)).expect("live representative");
    Ok(preserves_chordality_bits(&bits, index(q.u), index(q.v)))
}

/// Maximum cardinality search order: each step numbers an unnumbered vertex
/// with the most numbered neighbors, ties to the smallest index.
pub fn maximum_cardinality_search(g: &BitGraph) -> Vec<usize> {
    let n = g.len();
    let mut weight = vec![0usize; n];
    let mut numbered = vec![false; n];
    let mut order = Vec::with_capacity(n);
    for _ in 0..n {
        let v = (0..n)
            .filter(|&v| !numbered[v])
            .max_by(|&a, &b| weight[a].cmp(&weight[b]).then(b.cmp(&a)))
            .expect("unnumbered vertex");
        numbered[v] = true;
        order.push(v);
        for w in g.neighbors(v).iter() {
            if !numbered[w] {
                weight[w] += 1;
            }
        }
    }
    order
}

/// Chordality test: the reverse of a maximum cardinality search order is a
/// perfect elimination ordering iff the graph is chordal.
pub fn is_chordal(g: &BitGraph) -> bool {
    let order = maximum_cardinality_search(g);
    let mut position = vec![0usize; g.len()];
    for (i, &v) in order.iter().enumerate() {
        position[v] = i;
    }
    let mut earlier = Bits::new(g.len());
    for &v in &order {
        // Neighbors of v numbered before v must form a clique; it suffices to
        // check they are all adjacent to the latest of them.
        let before = g.neighbors(v).intersect(&earlier);
        if let Some(parent) = before.iter().max_by_key(|&w| position[w]) {
            let mut rest = before.clone();
            rest.remove(parent);
            let mut missing = rest;
            missing.difference_with(g.neighbors(parent));
            if !missing.is_empty() {
                return false;
            }
        }
        earlier.insert(v);
    }
    true
}

/// Chordality of the negative graph over super-vertices.
pub fn is_chordal_graph(g: &AggregatedGraph) -> bool {
    is_chordal(&g.negative_graph().1)
}
