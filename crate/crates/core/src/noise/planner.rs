//! Endpoint choice and finalization queries for redundant, error-revealing
//! query graphs.
//!
//! During the search every positive component is grown as a degree-3 tree: a
//! spine with pendant branches every `r + 1` spine vertices, each pendant about
//! `r / 2` long. Finalization pairs up the leaves so each component becomes
//! 2-edge-connected, and tops up negative answers between components.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::robust::positive_bridges;
use super::signed::SignedGraph;
use crate::dsu::DisjointSet;
use crate::error::{Error, Result};
use crate::graph::AggregatedGraph;
use crate::partition::Query;

/// Negative answers wanted between every two components.
pub const CROSS_TARGET: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RedundancyPlan {
    /// Target 2-path length.
    pub r: usize,
    /// Upper bound on 2-path lengths; `r + 1` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_prime: Option<usize>,
}

impl RedundancyPlan {
    pub fn new(r: usize) -> Result<Self> {
        let p = RedundancyPlan { r, r_prime: None };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.r == 0 {
            return Err(Error::Invalid("plan r must be at least 1".into()));
        }
        if self.r_prime.is_some_and(|rp| rp < self.r) {
            return Err(Error::Invalid("plan r' must be at least r".into()));
        }
        Ok(())
    }

    pub fn r_prime(&self) -> usize {
        self.r_prime.unwrap_or(self.r + 1)
    }

    /// Spine index of the `j`-th pendant branch.
    fn branch_index(&self, j: usize) -> usize {
        self.r.div_ceil(2) + j * (self.r + 1)
    }

    /// Length of the `j`-th pendant; alternating halves so two pendants
    /// joined at finalization give about `r`.
    fn pendant_target(&self, j: usize) -> usize {
        if j % 2 == 0 {
            (self.r / 2).max(1)
        } else {
            (self.r.div_ceil(2)).max(1)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Pendant {
    items: Vec<usize>,
    target: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Spine {
    spine: Vec<usize>,
    pendants: Vec<Pendant>,
}

impl Spine {
    fn members(&self) -> impl Iterator<Item = usize> + '_ {
        self.spine
            .iter()
            .copied()
            .chain(self.pendants.iter().flat_map(|p| p.items.iter().copied()))
    }

    fn size(&self) -> usize {
        self.spine.len() + self.pendants.iter().map(|p| p.items.len()).sum::<usize>()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Attach {
    ExtendPendant,
    NewPendant,
    ExtendHead,
    /// Two singletons form a two-vertex spine.
    Pair,
    /// Anything else; the merged component loses its shape.
    Other,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Proposal {
    asked: Query,
    attach: Attach,
    /// Representative of the shaped side, and the item being attached.
    host: usize,
    item: usize,
}

/// Shapes of the components grown under a plan, keyed by representative.
/// Singletons and components without a shape are implicit.
#[derive(Debug, Clone)]
pub struct PlanForest {
    plan: RedundancyPlan,
    shapes: HashMap<usize, Spine>,
    last: Option<Proposal>,
}

/// Number of distinct positive neighbors of `x`.
fn positive_degree(g: &SignedGraph, x: usize) -> usize {
    g.positive_neighbors(x).len()
}

fn min_degree_member(g: &SignedGraph, members: &[usize]) -> usize {
    *members
        .iter()
        .min_by_key(|&&x| (positive_degree(g, x), x))
        .expect("components are non-empty")
}

impl PlanForest {
    pub fn new(plan: RedundancyPlan) -> Self {
        PlanForest {
            plan,
            shapes: HashMap::new(),
            last: None,
        }
    }

    pub fn plan(&self) -> RedundancyPlan {
        self.plan
    }

    /// Number of components currently carrying a spine shape.
    pub fn shaped(&self) -> usize {
        self.shapes.len()
    }

    fn attach_point(&self, s: &Spine) -> (usize, Attach) {
        if let Some(p) = s.pendants.last() {
            if p.items.len() < p.target {
                return (*p.items.last().expect("pendants start non-empty"), Attach::ExtendPendant);
            }
        }
        let bi = self.plan.branch_index(s.pendants.len());
        if s.size() >= 3 * self.plan.r && bi + 1 < s.spine.len() {
            return (s.spine[bi], Attach::NewPendant);
        }
        (*s.spine.last().expect("spines are non-empty"), Attach::ExtendHead)
    }

    /// Replaces a strategy query by the endpoints the plan wants asked.
    /// The super-vertices joined are the same, so the answer means the same.
    pub fn choose_endpoints(&mut self, agg: &AggregatedGraph, g: &SignedGraph, q: Query) -> Query {
        let (a, b) = (agg.rep(q.u), agg.rep(q.v));
        let (sa, sb) = (agg.size(a), agg.size(b));
        let proposal = if sa == 1 && sb == 1 {
            Proposal {
                asked: q,
                attach: Attach::Pair,
                host: b,
                item: q.u,
            }
        } else if sa == 1 || sb == 1 {
            let (x, host) = if sa == 1 { (q.u, b) } else { (q.v, a) };
            match self.shapes.get(&host) {
                Some(s) => {
                    let (point, attach) = self.attach_point(s);
                    Proposal {
                        asked: Query { u: x, v: point },
                        attach,
                        host,
                        item: x,
                    }
                }
                None => Proposal {
                    asked: Query {
                        u: x,
                        v: min_degree_member(g, agg.members(host)),
                    },
                    attach: Attach::Other,
                    host,
                    item: x,
                },
            }
        } else {
            Proposal {
                asked: Query {
                    u: min_degree_member(g, agg.members(a)),
                    v: min_degree_member(g, agg.members(b)),
                },
                attach: Attach::Other,
                host: b,
                item: a,
            }
        };
        self.last = Some(proposal);
        proposal.asked
    }

    /// Records a merge of the components `old_a` and `old_b` (representatives
    /// before the answer) into `new_rep` through the answer on `asked`.
    pub fn on_merge(&mut self, old_a: usize, old_b: usize, new_rep: usize, asked: Query) {
        let last = self.last.take().filter(|p| p.asked.same_pair(asked));
        let host_shape = last.and_then(|p| self.shapes.get(&p.host).cloned());
        self.shapes.remove(&old_a);
        self.shapes.remove(&old_b);
        let Some(p) = last else { return };
        let shape = match (p.attach, host_shape) {
            (Attach::Pair, _) => Some(Spine {
                spine: vec![p.host, p.item],
                pendants: Vec::new(),
            }),
            (Attach::ExtendHead, Some(mut s)) => {
                s.spine.push(p.item);
                Some(s)
            }
            (Attach::ExtendPendant, Some(mut s)) => {
                s.pendants.last_mut().expect("pendant exists").items.push(p.item);
                Some(s)
            }
            (Attach::NewPendant, Some(mut s)) => {
                let target = self.plan.pendant_target(s.pendants.len());
                s.pendants.push(Pendant {
                    items: vec![p.item],
                    target,
                });
                Some(s)
            }
            _ => None,
        };
        if let Some(s) = shape {
            self.shapes.insert(new_rep, s);
        }
    }

    /// Keeps shapes whose component is unchanged after answers were corrected.
    pub fn rebuild(&mut self, agg: &AggregatedGraph) {
        self.last = None;
        let old = std::mem::take(&mut self.shapes);
        for s in old.into_values() {
            let rep = agg.rep(s.spine[0]);
            if agg.size(rep) == s.size() && s.members().all(|x| agg.rep(x) == rep) {
                self.shapes.insert(rep, s);
            }
        }
    }

    pub fn clear(&mut self) {
        self.shapes.clear();
        self.last = None;
    }
}

/// Leaf-pairing queries that make every positive component of size >= 2
/// 2-edge-connected.
///
/// Components are contracted along their bridges; the leaves of each bridge
/// tree, in depth-first order, are paired `i` with `i + L/2`, and an odd last
/// leaf is joined to the first. A two-item component gets the same pair again.
pub fn closure_queries(g: &SignedGraph) -> Vec<Query> {
    let bridges = positive_bridges(g);
    if bridges.is_empty() {
        return Vec::new();
    }
    let n = g.n();
    let is_bridge: HashSet<usize> = bridges.iter().copied().collect();
    let mut two_edge = DisjointSet::new(n);
    for (id, e) in g.edges().iter().enumerate() {
        if e.positive && !is_bridge.contains(&id) {
            two_edge.union(e.u, e.v);
        }
    }
    let mut node = vec![0; n];
    for (x, slot) in node.iter_mut().enumerate() {
        *slot = two_edge.find(x);
    }
    // Bridge-tree adjacency over 2-edge-connected classes.
    let mut tree: HashMap<usize, Vec<usize>> = HashMap::new();
    for &id in &bridges {
        let e = g.edge(id);
        let (a, b) = (node[e.u], node[e.v]);
        tree.entry(a).or_default().push(b);
        tree.entry(b).or_default().push(a);
    }
    let mut class_members: HashMap<usize, Vec<usize>> = HashMap::new();
    for x in 0..n {
        if tree.contains_key(&node[x]) {
            class_members.entry(node[x]).or_default().push(x);
        }
    }
    let mut roots: Vec<usize> = tree.keys().copied().collect();
    roots.sort_unstable_by_key(|&c| class_members[&c][0]);
    let mut visited: HashSet<usize> = HashSet::new();
    let mut out = Vec::new();
    for root in roots {
        if visited.contains(&root) {
            continue;
        }
        let mut leaves = Vec::new();
        let mut stack = vec![root];
        while let Some(c) = stack.pop() {
            if !visited.insert(c) {
                continue;
            }
            let mut next = tree[&c].clone();
            next.sort_unstable_by_key(|&d| class_members[&d][0]);
            if next.len() == 1 {
                leaves.push(c);
            }
            for d in next.into_iter().rev() {
                if !visited.contains(&d) {
                    stack.push(d);
                }
            }
        }
        let reps: Vec<usize> = leaves
            .iter()
            .map(|c| min_degree_member(g, &class_members[c]))
            .collect();
        let l = reps.len();
        let h = l / 2;
        for i in 0..h {
            out.push(Query {
                u: reps[i],
                v: reps[i + h],
            });
        }
        if l % 2 == 1 && l > 1 {
            out.push(Query {
                u: reps[l - 1],
                v: reps[0],
            });
        }
    }
    out
}

/// Negative top-up queries so every two components share at least `target`
/// negative answers. Unasked pairs are preferred, walking diagonals first.
pub fn cross_queries(g: &SignedGraph, agg: &AggregatedGraph, target: usize) -> Vec<Query> {
    let reps = agg.reps();
    let index: HashMap<usize, usize> = reps.iter().enumerate().map(|(i, &r)| (r, i)).collect();
    let mut asked: HashSet<(usize, usize)> = HashSet::new();
    let mut between: HashMap<(usize, usize), usize> = HashMap::new();
    for e in g.edges() {
        asked.insert((e.u.min(e.v), e.u.max(e.v)));
        if !e.positive {
            let (a, b) = (index[&agg.rep(e.u)], index[&agg.rep(e.v)]);
            if a != b {
                *between.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
    }
    let mut out = Vec::new();
    for i in 0..reps.len() {
        for j in i + 1..reps.len() {
            let have = between.get(&(i, j)).copied().unwrap_or(0);
            if have >= target {
                continue;
            }
            let ma = agg.members(reps[i]);
            let mb = agg.members(reps[j]);
            let mut need = target - have;
            'search: for d in 0..mb.len() {
                for (k, &x) in ma.iter().enumerate() {
                    let y = mb[(k + d) % mb.len()];
                    if asked.insert((x.min(y), x.max(y))) {
                        out.push(Query { u: y, v: x });
                        need -= 1;
                        if need == 0 {
                            break 'search;
                        }
                    }
                }
            }
            for _ in 0..need {
                out.push(Query { u: mb[0], v: ma[0] });
            }
        }
    }
    out
}

/// Numbers of degree-2 vertices on each maximal path of degree-2 vertices in
/// the positive graph restricted to `members`. A component that is a single
/// cycle reports its length once.
pub fn two_path_lengths(g: &SignedGraph, members: &[usize]) -> Vec<usize> {
    let set: HashSet<usize> = members.iter().copied().collect();
    let nb = |x: usize| -> Vec<usize> {
        g.positive_neighbors(x)
            .into_iter()
            .filter(|y| set.contains(y))
            .collect()
    };
    let deg: HashMap<usize, usize> = members.iter().map(|&x| (x, nb(x).len())).collect();
    let mut out = Vec::new();
    let mut seen_paths: HashSet<(usize, usize, usize, usize)> = HashSet::new();
    for &s in members {
        if deg[&s] == 2 {
            continue;
        }
        for first in nb(s) {
            let (mut prev, mut cur, mut count) = (s, first, 0);
            while deg[&cur] == 2 {
                count += 1;
                let next = nb(cur).into_iter().find(|&y| y != prev).expect("degree two");
                prev = cur;
                cur = next;
            }
            let key = if (s, first) <= (cur, prev) {
                (s, first, cur, prev)
            } else {
                (cur, prev, s, first)
            };
            if seen_paths.insert(key) {
                out.push(count);
            }
        }
    }
    if out.is_empty() && members.len() > 2 && members.iter().all(|x| deg[x] == 2) {
        out.push(members.len());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::Partition;

    /// Grows one block item by item under the plan, like a clique run does.
    fn grow(n: usize, r: usize) -> (SignedGraph, AggregatedGraph, PlanForest) {
        let mut forest = PlanForest::new(RedundancyPlan::new(r).unwrap());
        let mut agg = AggregatedGraph::new(n).unwrap();
        let mut g = SignedGraph::new(n);
        for x in 1..n {
            let q = forest.choose_endpoints(&agg, &g, Query { u: x, v: 0 });
            let (ra, rb) = (agg.rep(q.u), agg.rep(q.v));
            g.add(q.u, q.v, true, x as u64, false);
            agg.observe(q, true).unwrap();
            forest.on_merge(ra, rb, agg.rep(0), q);
        }
        (g, agg, forest)
    }

    fn max_degree(g: &SignedGraph) -> usize {
        (0..g.n()).map(|x| g.positive_neighbors(x).len()).max().unwrap_or(0)
    }

    fn is_bridgeless_after(g: &SignedGraph, extra: &[Query]) -> bool {
        let mut h = g.clone();
        for (i, q) in extra.iter().enumerate() {
            h.add(q.u, q.v, true, 10_000 + i as u64, false);
        }
        positive_bridges(&h).is_empty()
    }

    #[test]
    fn grown_tree_is_degree_three_with_r_spaced_spine() {
        for r in [2, 3, 5, 8] {
            let (g, _, forest) = grow(20 * r, r);
            assert_eq!(forest.shaped(), 1);
            assert!(max_degree(&g) <= 3);
            let s = forest.shapes.values().next().unwrap();
            // Interior spine segments between branch points hold exactly r items.
            let branches: Vec<usize> = (0..s.pendants.len()).map(|j| forest.plan.branch_index(j)).collect();
            for w in branches.windows(2) {
                assert_eq!(w[1] - w[0] - 1, r);
            }
            assert!(s.pendants.len() >= 5, "r={r}: {}", s.pendants.len());
            // The tree is a tree.
            assert_eq!(g.len(), 20 * r - 1);
        }
    }

    #[test]
    fn closure_makes_components_two_edge_connected() {
        for r in [1, 3, 5] {
            for n in [2, 3, 7, 40, 101] {
                let (g, _, _) = grow(n, r);
                let q = closure_queries(&g);
                assert!(is_bridgeless_after(&g, &q), "r={r} n={n}");
            }
        }
    }

    #[test]
    fn size_two_block_gets_same_pair() {
        let mut g = SignedGraph::new(2);
        g.add(1, 0, true, 0, false);
        let q = closure_queries(&g);
        assert_eq!(q.len(), 1);
        assert_eq!(q[0].key(), (0, 1));
    }

    #[test]
    fn closure_count_for_perfect_block() {
        // Size 3r + 3: spine with one pendant, so three leaves; closure needs
        // two queries (one pair plus the odd leaf).
        for r in [3, 4, 6] {
            let (g, _, _) = grow(3 * r + 3, r);
            let q = closure_queries(&g);
            assert!((1..=2).contains(&q.len()), "r={r}: {}", q.len());
        }
    }

    #[test]
    fn closed_grown_tree_two_paths_near_r() {
        let r = 5;
        let (g, _, _) = grow(200, r);
        let members: Vec<usize> = (0..200).collect();
        let lens = two_path_lengths(&g, &members);
        // Internal spine segments are exactly r.
        assert!(lens.iter().filter(|&&l| l == r).count() >= 10);
        let mut h = g.clone();
        for (i, q) in closure_queries(&g).iter().enumerate() {
            h.add(q.u, q.v, true, 1000 + i as u64, false);
        }
        let closed = two_path_lengths(&h, &members);
        let near = closed.iter().filter(|&&l| l + 1 >= r && l <= r + 1).count();
        assert!(near * 10 >= closed.len() * 7, "{closed:?}");
    }

    #[test]
    fn random_trees_close_to_bridgeless() {
        use rand::Rng;
        let mut rng = crate::rng::stream_rng(3, 0);
        for _ in 0..200 {
            let n = rng.random_range(2..30);
            let mut g = SignedGraph::new(n);
            for x in 1..n {
                let p = rng.random_range(0..x);
                g.add(x, p, true, x as u64, false);
            }
            let q = closure_queries(&g);
            assert!(is_bridgeless_after(&g, &q));
            assert!(q.len() <= n / 2 + 1);
        }
    }

    #[test]
    fn cross_top_up() {
        // Three two-item blocks, one negative between each pair.
        let truth = Partition::from_blocks(6, vec![vec![0, 1], vec![2, 3], vec![4, 5]]).unwrap();
        let mut g = SignedGraph::new(6);
        for (t, &(u, v, s)) in [(0, 1, true), (2, 3, true), (4, 5, true), (0, 2, false), (0, 4, false), (2, 4, false)]
            .iter()
            .enumerate()
        {
            g.add(u, v, s, t as u64, false);
        }
        let agg = g.to_aggregated().unwrap();
        let q = cross_queries(&g, &agg, CROSS_TARGET);
        assert_eq!(q.len(), 6);
        assert!(q.iter().all(|q| !truth.same_block(q.u, q.v)));
        let keys: HashSet<_> = q.iter().map(|q| q.key()).collect();
        assert_eq!(keys.len(), 6);
        for q in &q {
            g.add(q.u, q.v, false, 100, false);
        }
        assert!(cross_queries(&g, &agg, CROSS_TARGET).is_empty());
    }

    #[test]
    fn cross_repeats_when_pairs_run_out() {
        let mut g = SignedGraph::new(2);
        g.add(0, 1, false, 0, false);
        let agg = g.to_aggregated().unwrap();
        let q = cross_queries(&g, &agg, 3);
        assert_eq!(q.len(), 2);
        assert!(q.iter().all(|q| q.key() == (0, 1)));
    }

    #[test]
    fn plan_validation() {
        assert!(RedundancyPlan::new(0).is_err());
        assert_eq!(RedundancyPlan::new(5).unwrap().r_prime(), 6);
        let p: RedundancyPlan = serde_json::from_str(r#"{"r":4,"r_prime":3}"#).unwrap();
        assert!(p.validate().is_err());
    }
}
