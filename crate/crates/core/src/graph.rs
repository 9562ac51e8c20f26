//! The aggregated graph: the knowledge state of an active clustering run.
//!
//! Positive answers merge items into super-vertices; negative answers add
//! edges between super-vertices. Super-vertices are named by their smallest
//! member.

use std::collections::BTreeSet;

use num_bigint::BigUint;

use crate::bitset::BitGraph;
use crate::dsu::DisjointSet;
use crate::error::{Error, Result};
use crate::partition::{Answer, Partition, Query, QueryLog};

/// Default bound on super-vertex count for exhaustive computations.
pub const EXHAUSTIVE_LIMIT: usize = 12;

/// What applying an answer did to the graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Applied {
    /// Two super-vertices merged; `rep` is the representative afterwards.
    Merged { rep: usize, absorbed: usize },
    /// A negative edge was added between two super-vertices.
    Separated { a: usize, b: usize },
    /// The answer agreed with what was already known.
    Redundant,
}

#[derive(Debug, Clone)]
pub struct AggregatedGraph {
    n: usize,
    dsu: DisjointSet,
    // Indexed by DSU root: members and negative neighbors (as roots).
    members: Vec<Vec<usize>>,
    adj: Vec<BTreeSet<usize>>,
    live: BTreeSet<usize>,
    edges: usize,
}

impl AggregatedGraph {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyGround);
        }
        Ok(AggregatedGraph {
            n,
            dsu: DisjointSet::new(n),
            members: (0..n).map(|i| vec![i]).collect(),
            adj: vec![BTreeSet::new(); n],
            live: (0..n).collect(),
            edges: 0,
        })
    }

    /// Replays a log from the empty graph. Answers that repeat known
    /// relations are accepted; contradictions are reported.
    pub fn replay(log: &QueryLog) -> Result<Self> {
        let mut g = AggregatedGraph::new(log.n())?;
        for a in log.answers() {
            g.observe(a.query, a.positive)?;
        }
        Ok(g)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn supervertex_count(&self) -> usize {
        self.live.len()
    }

    pub fn negative_edge_count(&self) -> usize {
        self.edges
    }

    /// Representative (smallest member) of the super-vertex holding `item`.
    pub fn rep(&self, item: usize) -> usize {
        self.dsu.representative(item)
    }

    fn root(&self, item: usize) -> usize {
        self.dsu.root(item)
    }

    /// Representatives of all super-vertices, ascending.
    pub fn reps(&self) -> Vec<usize> {
        let mut out: Vec<usize> = self.live.iter().map(|&r| self.dsu.root_min(r)).collect();
        out.sort_unstable();
        out
    }

    pub fn members(&self, item: usize) -> &[usize] {
        &self.members[self.root(item)]
    }

    pub fn size(&self, item: usize) -> usize {
        self.dsu.root_size(self.root(item))
    }

    pub fn degree(&self, item: usize) -> usize {
        self.adj[self.root(item)].len()
    }

    /// Representatives of the negative neighbors of `item`'s super-vertex, ascending.
    pub fn neighbors(&self, item: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self.adj[self.root(item)]
            .iter()
            .map(|&r| self.dsu.root_min(r))
            .collect();
        out.sort_unstable();
        out
    }

    /// Sum of super-vertex sizes over the negative neighbors of `item`'s super-vertex.
    pub fn neighbor_mass(&self, item: usize) -> usize {
        self.adj[self.root(item)]
            .iter()
            .map(|&r| self.dsu.root_size(r))
            .sum()
    }

    pub fn same_supervertex(&self, u: usize, v: usize) -> bool {
        self.dsu.same(u, v)
    }

    pub fn has_negative(&self, u: usize, v: usize) -> bool {
        let (ru, rv) = (self.root(u), self.root(v));
        ru != rv && self.adj[ru].contains(&rv)
    }

    /// True if the relation of `u` and `v` follows from the answers so far.
    pub fn is_known(&self, u: usize, v: usize) -> bool {
        let (ru, rv) = (self.root(u), self.root(v));
        ru == rv || self.adj[ru].contains(&rv)
    }

    /// The relation implied so far: `Some(true)` same, `Some(false)` different.
    pub fn relation(&self, u: usize, v: usize) -> Option<bool> {
        let (ru, rv) = (self.root(u), self.root(v));
        if ru == rv {
            Some(true)
        } else if self.adj[ru].contains(&rv) {
            Some(false)
        } else {
            None
        }
    }

    fn check_items(&self, q: Query) -> Result<()> {
        for item in [q.u, q.v] {
            if item >= self.n {
                return Err(Error::ItemOutOfRange { item, n: self.n });
            }
        }
        if q.u == q.v {
            return Err(Error::SelfQuery(q.u));
        }
        Ok(())
    }

    /// Applies an answer to a useful query. Redundant queries and
    /// contradicting answers are rejected without changing the state.
    pub fn apply_answer(&mut self, a: &Answer) -> Result<Applied> {
        self.check_items(a.query)?;
        match self.relation(a.query.u, a.query.v) {
            None => Ok(self.apply_unknown(a.query, a.positive)),
            Some(known) if known == a.positive => Err(Error::RedundantQuery(a.query)),
            Some(_) => Err(Error::Contradiction { query: a.query }),
        }
    }

    /// Like [`apply_answer`](Self::apply_answer) but accepts answers that
    /// agree with known relations.
    pub fn observe(&mut self, q: Query, positive: bool) -> Result<Applied> {
        self.check_items(q)?;
        match self.relation(q.u, q.v) {
            None => Ok(self.apply_unknown(q, positive)),
            Some(known) if known == positive => Ok(Applied::Redundant),
            Some(_) => Err(Error::Contradiction { query: q }),
        }
    }

    fn apply_unknown(&mut self, q: Query, positive: bool) -> Applied {
        let (ru, rv) = (self.dsu.find(q.u), self.dsu.find(q.v));
        if !positive {
            self.adj[ru].insert(rv);
            self.adj[rv].insert(ru);
            self.edges += 1;
            return Applied::Separated {
                a: self.dsu.root_min(ru),
                b: self.dsu.root_min(rv),
            };
        }
        let (min_u, min_v) = (self.dsu.root_min(ru), self.dsu.root_min(rv));
        let (keep, gone) = self.dsu.union(ru, rv).expect("distinct super-vertices");
        self.live.remove(&gone);
        let moved = std::mem::take(&mut self.members[gone]);
        self.members[keep].extend(moved);
        let gone_adj = std::mem::take(&mut self.adj[gone]);
        for c in gone_adj {
            self.adj[c].remove(&gone);
            if self.adj[keep].contains(&c) {
                // Both halves were separated from c; the duplicate collapses.
                self.edges -= 1;
            } else {
                self.adj[c].insert(keep);
                self.adj[keep].insert(c);
            }
        }
        Applied::Merged {
            rep: min_u.min(min_v),
            absorbed: min_u.max(min_v),
        }
    }

    /// Resolved iff the negative edges form a complete graph on super-vertices.
    pub fn is_resolved(&self) -> bool {
        let s = self.live.len();
        self.edges == s * (s - 1) / 2
    }

    /// The partition by super-vertices.
    pub fn partition(&self) -> Partition {
        let labels: Vec<usize> = (0..self.n).map(|i| self.rep(i)).collect();
        Partition::from_labels(&labels)
    }

    /// Compact negative graph over super-vertices, with their representatives
    /// in ascending order (vertex `i` of the graph is `reps[i]`).
    pub fn negative_graph(&self) -> (Vec<usize>, BitGraph) {
        let reps = self.reps();
        let mut index = vec![usize::MAX; self.n];
        for (i, &r) in reps.iter().enumerate() {
            index[self.root(r)] = i;
        }
        let mut g = BitGraph::new(reps.len());
        for &root in &self.live {
            for &c in &self.adj[root] {
                if root < c {
                    g.add_edge(index[root], index[c]);
                }
            }
        }
        (reps, g)
    }

    /// Number of partitions of the items consistent with the answers so far.
    pub fn count_realizations(&self, limit: usize) -> Result<BigUint> {
        let s = self.supervertex_count();
        if s > limit {
            return Err(Error::LimitExceeded {
                what: "super-vertex count",
                value: s,
                limit,
            });
        }
        let (_, g) = self.negative_graph();
        Ok(BigUint::from(count_independent_partitions(&g)))
    }
}

/// Counts partitions of the vertex set into independent sets.
pub fn count_independent_partitions(g: &BitGraph) -> u64 {
    fn go(g: &BitGraph, v: usize, blocks: &mut Vec<crate::bitset::Bits>) -> u64 {
        if v == g.len() {
            return 1;
        }
        let mut total = 0;
        for i in 0..blocks.len() {
            if !blocks[i].intersects(g.neighbors(v)) {
                blocks[i].insert(v);
                total += go(g, v + 1, blocks);
                blocks[i].remove(v);
            }
        }
        let mut fresh = crate::bitset::Bits::new(g.len());
        fresh.insert(v);
        blocks.push(fresh);
        total += go(g, v + 1, blocks);
        blocks.pop();
        total
    }
    go(g, 0, &mut Vec::new())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(u: usize, v: usize) -> Query {
        Query::new(u, v).unwrap()
    }

    fn ans(u: usize, v: usize, positive: bool) -> Answer {
        Answer::new(q(u, v), positive, 0)
    }

    #[test]
    fn fresh_graphs() {
        assert!(AggregatedGraph::new(0).is_err());
        let g1 = AggregatedGraph::new(1).unwrap();
        assert!(g1.is_resolved());
        let g3 = AggregatedGraph::new(3).unwrap();
        assert_eq!(g3.supervertex_count(), 3);
        assert_eq!(g3.negative_edge_count(), 0);
        assert!(!g3.is_resolved());
    }

    #[test]
    fn merge_then_separate() {
        let mut g = AggregatedGraph::new(3).unwrap();
        assert_eq!(
            g.apply_answer(&ans(0, 1, true)).unwrap(),
            Applied::Merged { rep: 0, absorbed: 1 }
        );
        assert_eq!(g.supervertex_count(), 2);
        assert_eq!(g.reps(), vec![0, 2]);
        g.apply_answer(&ans(1, 2, false)).unwrap();
        assert!(g.has_negative(0, 2));
        assert!(g.is_resolved());
        assert_eq!(g.partition().to_string(), "{{0,1},{2}}");
    }

    #[test]
    fn four_items_two_blocks() {
        let mut g = AggregatedGraph::new(4).unwrap();
        g.apply_answer(&ans(0, 1, true)).unwrap();
        g.apply_answer(&ans(2, 3, true)).unwrap();
        g.apply_answer(&ans(0, 2, false)).unwrap();
        assert_eq!(g.supervertex_count(), 2);
        assert_eq!(g.negative_edge_count(), 1);
        assert!(g.is_resolved());
    }

    #[test]
    fn redundant_and_contradicting_answers() {
        let mut g = AggregatedGraph::new(3).unwrap();
        g.apply_answer(&ans(0, 1, true)).unwrap();
        g.apply_answer(&ans(0, 2, false)).unwrap();
        assert!(matches!(
            g.apply_answer(&ans(1, 0, true)),
            Err(Error::RedundantQuery(_))
        ));
        assert!(matches!(
            g.apply_answer(&ans(2, 1, false)),
            Err(Error::RedundantQuery(_))
        ));
        assert!(matches!(
            g.apply_answer(&ans(1, 2, true)),
            Err(Error::Contradiction { .. })
        ));
        assert!(matches!(
            g.apply_answer(&ans(0, 1, false)),
            Err(Error::Contradiction { .. })
        ));
        assert_eq!(g.observe(q(2, 0), false).unwrap(), Applied::Redundant);
        assert_eq!(g.supervertex_count(), 2);
    }

    #[test]
    fn duplicate_negative_edges_collapse_on_merge() {
        let mut g = AggregatedGraph::new(3).unwrap();
        g.apply_answer(&ans(0, 2, false)).unwrap();
        g.apply_answer(&ans(1, 2, false)).unwrap();
        assert_eq!(g.negative_edge_count(), 2);
        g.apply_answer(&ans(0, 1, true)).unwrap();
        assert_eq!(g.negative_edge_count(), 1);
        assert_eq!(g.neighbors(2), vec![0]);
        assert!(g.is_resolved());
    }

    #[test]
    fn realization_counts() {
        let g = AggregatedGraph::new(3).unwrap();
        assert_eq!(g.count_realizations(12).unwrap(), BigUint::from(5u32));

        let mut g2 = AggregatedGraph::new(2).unwrap();
        g2.apply_answer(&ans(0, 1, false)).unwrap();
        assert_eq!(g2.count_realizations(12).unwrap(), BigUint::from(1u32));

        let mut c4 = AggregatedGraph::new(4).unwrap();
        for (a, b) in [(0, 1), (1, 2), (2, 3), (3, 0)] {
            c4.apply_answer(&ans(a, b, false)).unwrap();
        }
        assert_eq!(c4.count_realizations(12).unwrap(), BigUint::from(4u32));

        let big = AggregatedGraph::new(13).unwrap();
        assert!(matches!(
            big.count_realizations(12),
            Err(Error::LimitExceeded { .. })
        ));
    }

    #[test]
    fn four_cycle_realizations_by_enumeration() {
        // Oracle: enumerate all 15 partitions of 4 items and count those with
        // no cycle edge inside a block. Only {0,2} and {1,3} may share a block.
        let cycle = [(0, 1), (1, 2), (2, 3), (3, 0)];
        let count = crate::partition::all_partitions(4)
            .iter()
            .filter(|p| cycle.iter().all(|&(a, b)| !p.same_block(a, b)))
            .count();
        assert_eq!(count, 4);
    }

    #[test]
    fn replay_flags_contradiction() {
        let mut log = QueryLog::new(3);
        log.record(q(0, 1), true).unwrap();
        log.record(q(1, 2), true).unwrap();
        log.record(q(0, 2), false).unwrap();
        assert!(matches!(
            AggregatedGraph::replay(&log),
            Err(Error::Contradiction { .. })
        ));
    }
}
