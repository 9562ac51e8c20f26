//! Raw answer graph: every answer is an edge, repeated pairs are multi-edges.

use std::collections::VecDeque;

use serde::Serialize;

use crate::dsu::DisjointSet;
use crate::error::Result;
use crate::graph::AggregatedGraph;
use crate::partition::{Query, QueryLog};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SignedEdge {
    pub u: usize,
    pub v: usize,
    pub positive: bool,
    pub t: u64,
    pub repair: bool,
    /// Set once a repair has corrected this answer.
    pub corrected: bool,
}

impl SignedEdge {
    pub fn other(&self, x: usize) -> usize {
        if self.u == x {
            self.v
        } else {
            self.u
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct SignedGraph {
    n: usize,
    edges: Vec<SignedEdge>,
    adj: Vec<Vec<usize>>,
}

/// A cycle whose edges are all positive except one.
///
/// `edges[i]` joins `vertices[i]` and `vertices[(i + 1) % len]`; the negative
/// edge is last. Two opposite answers on one pair give a cycle of length 2.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ContradictoryCycle {
    pub vertices: Vec<usize>,
    pub edges: Vec<usize>,
}

impl ContradictoryCycle {
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Index into `edges` of the negative edge.
    pub fn negative_position(&self) -> usize {
        self.edges.len() - 1
    }
}

impl SignedGraph {
    pub fn new(n: usize) -> Self {
        SignedGraph {
            n,
            edges: Vec::new(),
            adj: vec![Vec::new(); n],
        }
    }

    pub fn from_log(log: &QueryLog) -> Self {
        let mut g = SignedGraph::new(log.n());
        for a in log.answers() {
            g.add(a.query.u, a.query.v, a.positive, a.t, a.repair);
        }
        g
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[SignedEdge] {
        &self.edges
    }

    pub fn edge(&self, i: usize) -> &SignedEdge {
        &self.edges[i]
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Edge ids incident to `x`.
    pub fn incident(&self, x: usize) -> &[usize] {
        &self.adj[x]
    }

    pub fn add(&mut self, u: usize, v: usize, positive: bool, t: u64, repair: bool) -> usize {
        let id = self.edges.len();
        self.edges.push(SignedEdge {
            u,
            v,
            positive,
            t,
            repair,
            corrected: false,
        });
        self.adj[u].push(id);
        self.adj[v].push(id);
        id
    }

    /// Reverses the sign of edge `i`.
    pub fn flip(&mut self, i: usize) {
        let e = &mut self.edges[i];
        e.positive = !e.positive;
        e.corrected = !e.corrected;
    }

    /// Distinct positive neighbors of `x`.
    pub fn positive_neighbors(&self, x: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self.adj[x]
            .iter()
            .map(|&i| &self.edges[i])
            .filter(|e| e.positive)
            .map(|e| e.other(x))
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Union-find over positive edges.
    pub fn positive_components(&self) -> DisjointSet {
        let mut d = DisjointSet::new(self.n);
        for e in self.edges.iter().filter(|e| e.positive) {
            d.union(e.u, e.v);
        }
        d
    }

    /// Shortest positive path from `s` to `t` as (vertices, edge ids).
    pub fn positive_path(&self, s: usize, t: usize) -> Option<(Vec<usize>, Vec<usize>)> {
        let mut parent: Vec<Option<usize>> = vec![None; self.n];
        let mut seen = vec![false; self.n];
        seen[s] = true;
        let mut queue = VecDeque::from([s]);
        while let Some(x) = queue.pop_front() {
            if x == t {
                break;
            }
            for &id in &self.adj[x] {
                let e = &self.edges[id];
                if !e.positive {
                    continue;
                }
                let y = e.other(x);
                if !seen[y] {
                    seen[y] = true;
                    parent[y] = Some(id);
                    queue.push_back(y);
                }
            }
        }
        if !seen[t] {
            return None;
        }
        let mut verts = vec![t];
        let mut edges = Vec::new();
        let mut x = t;
        while x != s {
            let id = parent[x].expect("reached vertex has a parent");
            edges.push(id);
            x = self.edges[id].other(x);
            verts.push(x);
        }
        verts.reverse();
        edges.reverse();
        Some((verts, edges))
    }

    /// A shortest contradictory cycle, or `None` if the answers are consistent.
    pub fn detect_contradiction(&self) -> Option<ContradictoryCycle> {
        let comps = self.positive_components();
        let mut best: Option<ContradictoryCycle> = None;
        for (id, e) in self.edges.iter().enumerate() {
            if e.positive || !comps.same(e.u, e.v) {
                continue;
            }
            if best.as_ref().is_some_and(|b| b.len() == 2) {
                break;
            }
            let (mut vertices, mut edges) = self.positive_path(e.u, e.v).expect("same component");
            if best.as_ref().is_none_or(|b| edges.len() + 1 < b.len()) {
                edges.push(id);
                vertices.shrink_to_fit();
                best = Some(ContradictoryCycle { vertices, edges });
            }
        }
        best
    }

    /// Contracts positive components; fails on a contradiction.
    pub fn to_aggregated(&self) -> Result<AggregatedGraph> {
        let mut g = AggregatedGraph::new(self.n)?;
        for e in self.edges.iter().filter(|e| e.positive) {
            g.observe(Query { u: e.u, v: e.v }, true)?;
        }
        for e in self.edges.iter().filter(|e| !e.positive) {
            g.observe(Query { u: e.u, v: e.v }, false)?;
        }
        Ok(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(n: usize, edges: &[(usize, usize, bool)]) -> SignedGraph {
        let mut g = SignedGraph::new(n);
        for (t, &(u, v, s)) in edges.iter().enumerate() {
            g.add(u, v, s, t as u64, false);
        }
        g
    }

    #[test]
    fn triangle() {
        let g = graph(3, &[(0, 1, true), (1, 2, true), (0, 2, false)]);
        let c = g.detect_contradiction().unwrap();
        assert_eq!(c.len(), 3);
        assert_eq!(c.vertices, vec![0, 1, 2]);
        assert_eq!(c.edges, vec![0, 1, 2]);
        assert!(!g.edge(c.edges[c.negative_position()]).positive);
    }

    #[test]
    fn consistent_graphs() {
        let g = graph(4, &[(0, 1, true), (1, 2, true), (2, 3, true)]);
        assert!(g.detect_contradiction().is_none());
        let g = graph(4, &[(0, 1, true), (2, 3, true), (0, 2, false), (1, 3, false)]);
        assert!(g.detect_contradiction().is_none());
        assert!(g.to_aggregated().unwrap().is_resolved());
    }

    #[test]
    fn long_path_with_chord() {
        let mut edges: Vec<(usize, usize, bool)> = (0..9).map(|i| (i, i + 1, true)).collect();
        edges.push((0, 9, false));
        let c = graph(10, &edges).detect_contradiction().unwrap();
        assert_eq!(c.len(), 10);
    }

    #[test]
    fn shortest_cycle_is_chosen() {
        // Long cycle via (0,9) and a short one via (3,5).
        let mut edges: Vec<(usize, usize, bool)> = (0..9).map(|i| (i, i + 1, true)).collect();
        edges.push((0, 9, false));
        edges.push((3, 5, false));
        let c = graph(10, &edges).detect_contradiction().unwrap();
        assert_eq!(c.len(), 3);
    }

    #[test]
    fn same_pair_both_ways() {
        let g = graph(2, &[(0, 1, true), (1, 0, false)]);
        let c = g.detect_contradiction().unwrap();
        assert_eq!(c.len(), 2);
        assert!(g.to_aggregated().is_err());
    }
}
