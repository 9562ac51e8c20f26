use serde::{Deserialize, Serialize};

use crate::bitset::{BitGraph, Bits};
use crate::error::{Error, Result};
use crate::graph::AggregatedGraph;
use crate::partition::{Partition, Query};

/// Role of an answered query in a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QueryClass {
    /// Answered positively.
    Core,
    /// Answered negatively and not implied by an alternating induced path.
    Productive,
    /// Answered negatively although an induced path between the endpoints
    /// alternates between their two classes.
    Excessive,
}

/// Classifies `q` asked on the state `g` (before the answer is applied).
///
/// A negative query is excessive when some induced path `x = w_1, ..., w_{2m} = y`
/// of the negative graph joins the endpoints' super-vertices, with the
/// vertices alternating between the endpoints' truth classes. The vertex
/// count includes both endpoints.
pub fn classify_query(
    g: &AggregatedGraph,
    q: Query,
    positive: bool,
    truth: &Partition,
    limit: usize,
) -> Result<QueryClass> {
    if positive {
        return Ok(QueryClass::Core);
    }
    let s = g.supervertex_count();
    if s > limit {
        return Err(Error::LimitExceeded {
            what: "super-vertex count",
            value: s,
            limit,
        });
    }
    let (reps, bits) = g.negative_graph();
    let index = |item: usize| reps.binary_search(&g.rep(item)).expect("live representative");
    let (x, y) = (index(q.u), index(q.v));
    let class: Vec<usize> = reps.iter().map(|&r| truth.block_of(r)).collect();
    if class[x] == class[y] || bits.has_edge(x, y) {
        return Ok(QueryClass::Productive);
    }
    let mut allowed = Bits::new(s);
    for (i, &c) in class.iter().enumerate() {
        if c == class[x] || c == class[y] {
            allowed.insert(i);
        }
    }
    let mut outside = Bits::full(s);
    outside.difference_with(&allowed);
    if !bits.reachable_avoiding(x, &outside).contains(y) {
        return Ok(QueryClass::Productive);
    }
    let mut forbidden = Bits::new(s);
    forbidden.insert(x);
    let found = alternating_induced_path(&bits, &class, &allowed, y, x, 1, &forbidden);
    Ok(if found {
        QueryClass::Excessive
    } else {
        QueryClass::Productive
    })
}

// Depth-first extension of an induced path ending at `last` with `len` vertices.
// `forbidden` holds the path and every neighbor of a path vertex other than `last`.
fn alternating_induced_path(
    g: &BitGraph,
    class: &[usize],
    allowed: &Bits,
    target: usize,
    last: usize,
    len: usize,
    forbidden: &Bits,
) -> bool {
    let mut next = g.neighbors(last).intersect(allowed);
    next.difference_with(forbidden);
    for w in next.iter() {
        if class[w] == class[last] {
            continue;
        }
        if w == target {
            if (len + 1) % 2 == 0 {
                return true;
            }
            continue;
        }
        let mut f = forbidden.clone();
        f.union_with(g.neighbors(last));
        f.insert(w);
        // The target may only touch the final path vertex.
        if f.contains(target) && !g.has_edge(w, target) {
            continue;
        }
        if alternating_induced_path(g, class, allowed, target, w, len + 1, &f) {
            return true;
        }
    }
    false
}

/// Per-class totals of a run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCounts {
    pub core: usize,
    pub productive: usize,
    pub excessive: usize,
}

impl ClassCounts {
    pub fn add(&mut self, c: QueryClass) {
        match c {
            QueryClass::Core => self.core += 1,
            QueryClass::Productive => self.productive += 1,
            QueryClass::Excessive => self.excessive += 1,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(u: usize, v: usize) -> Query {
        Query::new(u, v).unwrap()
    }

    #[test]
    fn spec_examples() {
        let truth = Partition::from_blocks(4, vec![vec![0, 2], vec![1, 3]]).unwrap();
        let g = AggregatedGraph::new(4).unwrap();
        assert_eq!(classify_query(&g, q(0, 1), true, &truth, 12).unwrap(), QueryClass::Core);
        assert_eq!(
            classify_query(&g, q(0, 1), false, &truth, 12).unwrap(),
            QueryClass::Productive
        );
        // Induced path 0 - 1 - 2 - 3 alternating between {0,2} and {1,3}.
        let mut g = AggregatedGraph::new(4).unwrap();
        for (a, b) in [(0, 1), (1, 2), (2, 3)] {
            g.observe(q(a, b), false).unwrap();
        }
        assert_eq!(
            classify_query(&g, q(0, 3), false, &truth, 12).unwrap(),
            QueryClass::Excessive
        );
    }

    #[test]
    fn odd_paths_are_not_excessive() {
        // Path 0 - 1 - 2 between blocks {0,2} and {1}: 0 and 2 share a class,
        // so (0, 2) would be positive; a path through a third class does not count.
        let truth = Partition::from_blocks(4, vec![vec![0], vec![1], vec![2, 3]]).unwrap();
        let mut g = AggregatedGraph::new(4).unwrap();
        g.observe(q(0, 1), false).unwrap();
        g.observe(q(1, 2), false).unwrap();
        assert_eq!(
            classify_query(&g, q(0, 2), false, &truth, 12).unwrap(),
            QueryClass::Productive
        );
    }

    #[test]
    fn limit_is_enforced() {
        let truth = Partition::singletons(13);
        let g = AggregatedGraph::new(13).unwrap();
        assert!(classify_query(&g, q(0, 1), false, &truth, 12).is_err());
    }
}
