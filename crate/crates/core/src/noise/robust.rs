//! Structural error-robustness checks and the query-count formulas.

use std::collections::{HashMap, VecDeque};

use super::signed::SignedGraph;
use crate::error::{Error, Result};

/// Largest edge count accepted by [`count_switchable_sets`].
pub const SWITCHABLE_EDGE_LIMIT: usize = 64;

/// Unit-capacity max-flow between `s` and `t` over the undirected positive
/// multigraph restricted to `members`, stopping once `cap` paths are found.
fn edge_disjoint_paths(g: &SignedGraph, members: &[usize], s: usize, t: usize, cap: usize) -> usize {
    let index: HashMap<usize, usize> = members.iter().enumerate().map(|(i, &x)| (x, i)).collect();
    // Residual capacities per positive edge and direction: flow[id] in {-1, 0, 1}
    // measured from e.u to e.v.
    let mut flow: HashMap<usize, i32> = HashMap::new();
    let mut found = 0;
    while found < cap {
        let mut parent: Vec<Option<(usize, usize)>> = vec![None; members.len()];
        let mut seen = vec![false; members.len()];
        let si = index[&s];
        let ti = index[&t];
        seen[si] = true;
        let mut queue = VecDeque::from([s]);
        while let Some(x) = queue.pop_front() {
            if x == t {
                break;
            }
            for &id in g.incident(x) {
                let e = g.edge(id);
                if !e.positive || e.u == e.v {
                    continue;
                }
                let y = e.other(x);
                let Some(&yi) = index.get(&y) else { continue };
                let f = flow.get(&id).copied().unwrap_or(0);
                let forward = e.u == x;
                // Capacity 1 each way on an undirected edge.
                let residual = if forward { 1 - f } else { 1 + f };
                if residual > 0 && !seen[yi] {
                    seen[yi] = true;
                    parent[yi] = Some((id, x));
                    queue.push_back(y);
                }
            }
        }
        if !seen[ti] {
            break;
        }
        let mut y = t;
        while y != s {
            let (id, x) = parent[index[&y]].expect("on augmenting path");
            let forward = g.edge(id).u == x;
            *flow.entry(id).or_insert(0) += if forward { 1 } else { -1 };
            y = x;
        }
        found += 1;
    }
    found
}

/// Positive components as sorted member lists, in order of smallest member.
pub fn positive_component_lists(g: &SignedGraph) -> Vec<Vec<usize>> {
    let mut d = g.positive_components();
    let mut by_root: HashMap<usize, usize> = HashMap::new();
    let mut out: Vec<Vec<usize>> = Vec::new();
    for x in 0..g.n() {
        let r = d.find(x);
        let i = *by_root.entry(r).or_insert_with(|| {
            out.push(Vec::new());
            out.len() - 1
        });
        out[i].push(x);
    }
    out
}

/// Whether every positive component of size >= 2 is (k+1)-edge-connected and
/// every two components are joined by at least k+1 negative answers.
///
/// Assumes `g` has no contradiction.
pub fn verify_k_robust(g: &SignedGraph, k: usize) -> bool {
    let comps = positive_component_lists(g);
    for c in comps.iter().filter(|c| c.len() >= 2) {
        let root = c[0];
        if c[1..].iter().any(|&x| edge_disjoint_paths(g, c, root, x, k + 1) < k + 1) {
            return false;
        }
    }
    let mut comp_of = vec![0; g.n()];
    for (i, c) in comps.iter().enumerate() {
        for &x in c {
            comp_of[x] = i;
        }
    }
    let mut negatives: HashMap<(usize, usize), usize> = HashMap::new();
    for e in g.edges().iter().filter(|e| !e.positive) {
        let (a, b) = (comp_of[e.u], comp_of[e.v]);
        if a != b {
            *negatives.entry((a.min(b), a.max(b))).or_insert(0) += 1;
        }
    }
    for a in 0..comps.len() {
        for b in a + 1..comps.len() {
            if negatives.get(&(a, b)).copied().unwrap_or(0) < k + 1 {
                return false;
            }
        }
    }
    true
}

/// Ids of positive edges that are bridges of the positive multigraph.
/// Parallel answers on one pair are never bridges.
pub fn positive_bridges(g: &SignedGraph) -> Vec<usize> {
    let n = g.n();
    let mut disc = vec![usize::MAX; n];
    let mut low = vec![0; n];
    let mut bridges = Vec::new();
    let mut timer = 0;
    for start in 0..n {
        if disc[start] != usize::MAX {
            continue;
        }
        disc[start] = timer;
        low[start] = timer;
        timer += 1;
        // (vertex, edge id used to enter, next incident index)
        let mut stack: Vec<(usize, Option<usize>, usize)> = vec![(start, None, 0)];
        while let Some(&mut (x, via, ref mut next)) = stack.last_mut() {
            let inc = g.incident(x);
            if *next < inc.len() {
                let id = inc[*next];
                *next += 1;
                let e = g.edge(id);
                if !e.positive || Some(id) == via {
                    continue;
                }
                let y = e.other(x);
                if disc[y] == usize::MAX {
                    disc[y] = timer;
                    low[y] = timer;
                    timer += 1;
                    stack.push((y, Some(id), 0));
                } else {
                    low[x] = low[x].min(disc[y]);
                }
            } else {
                stack.pop();
                if let Some(&(p, _, _)) = stack.last() {
                    low[p] = low[p].min(low[x]);
                    if low[x] > disc[p] {
                        bridges.push(via.expect("non-root has an entry edge"));
                    }
                }
            }
        }
    }
    bridges.sort_unstable();
    bridges
}

/// Number of `k`-subsets of answers whose joint switching leaves the graph
/// free of contradictions (`k <= 2`).
///
/// A contradiction-free graph has `d_0 = 0` by convention: only switch sets
/// that would go unnoticed are of interest, and the empty set changes nothing.
pub fn count_switchable_sets(g: &SignedGraph, k: usize) -> Result<u64> {
    if k > 2 {
        return Err(Error::LimitExceeded {
            what: "switch set size",
            value: k,
            limit: 2,
        });
    }
    if g.len() > SWITCHABLE_EDGE_LIMIT {
        return Err(Error::LimitExceeded {
            what: "edges",
            value: g.len(),
            limit: SWITCHABLE_EDGE_LIMIT,
        });
    }
    let m = g.len();
    let mut h = g.clone();
    let mut count = 0;
    match k {
        0 => {}
        1 => {
            for i in 0..m {
                h.flip(i);
                if h.detect_contradiction().is_none() {
                    count += 1;
                }
                h.flip(i);
            }
        }
        _ => {
            for i in 0..m {
                h.flip(i);
                for j in i + 1..m {
                    h.flip(j);
                    if h.detect_contradiction().is_none() {
                        count += 1;
                    }
                    h.flip(j);
                }
                h.flip(i);
            }
        }
    }
    Ok(count)
}

/// `(k+1)(C(b,2) + n/2)`, rounded up.
///
/// For `k = 0` this is below the `n - b` positive answers any tree needs;
/// the value is returned as the formula gives it.
pub fn min_queries_k_robust(n: u64, b: u64, k: u64) -> u64 {
    let pairs = b * b.saturating_sub(1) / 2;
    ((k + 1) * (2 * pairs + n)).div_ceil(2)
}

/// `C(r'+1, 2) * 3n / (3r + 2)`.
pub fn c2_bound(n: u64, r: u64, r_prime: u64) -> f64 {
    let c = (r_prime + 1) * r_prime / 2;
    c as f64 * 3.0 * n as f64 / (3 * r + 2) as f64
}

/// Approximate in-block extra queries of the redundancy plan: `n/(3r+2) + b`.
pub fn expected_extra_in_block(n: u64, b: u64, r: u64) -> f64 {
    n as f64 / (3 * r + 2) as f64 + b as f64
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

    fn two_triangles(cross: usize) -> SignedGraph {
        let mut e = vec![
            (0, 1, true),
            (1, 2, true),
            (0, 2, true),
            (3, 4, true),
            (4, 5, true),
            (3, 5, true),
        ];
        for i in 0..cross {
            e.push((i % 3, 3 + i % 3, false));
        }
        graph(6, &e)
    }

    #[test]
    fn triangles_are_one_robust() {
        assert!(verify_k_robust(&two_triangles(2), 1));
        assert!(!verify_k_robust(&two_triangles(1), 1));
        assert!(!verify_k_robust(&two_triangles(3), 2));
    }

    #[test]
    fn trees_have_bridges() {
        let g = graph(3, &[(0, 1, true), (1, 2, true)]);
        assert!(!verify_k_robust(&g, 1));
        assert!(verify_k_robust(&g, 0));
        assert_eq!(positive_bridges(&g), vec![0, 1]);
    }

    #[test]
    fn parallel_answers_are_not_bridges() {
        let g = graph(3, &[(0, 1, true), (0, 1, true), (1, 2, true)]);
        assert_eq!(positive_bridges(&g), vec![2]);
        let g = graph(2, &[(0, 1, true), (0, 1, true)]);
        assert!(verify_k_robust(&g, 1));
        assert!(positive_bridges(&two_triangles(2)).is_empty());
    }

    #[test]
    fn k0_resolved_graphs() {
        let g = graph(4, &[(0, 1, true), (2, 3, true), (1, 2, false)]);
        assert!(verify_k_robust(&g, 0));
        let g = graph(3, &[(0, 1, true)]);
        assert!(!verify_k_robust(&g, 0));
    }

    #[test]
    fn bridges_match_connectivity() {
        // Bridge by definition: removing it disconnects its endpoints.
        let g = graph(
            6,
            &[(0, 1, true), (1, 2, true), (2, 0, true), (2, 3, true), (3, 4, true), (4, 5, true), (5, 3, true)],
        );
        let bridges = positive_bridges(&g);
        for id in 0..g.len() {
            let mut h = SignedGraph::new(6);
            for (j, e) in g.edges().iter().enumerate() {
                if j != id {
                    h.add(e.u, e.v, e.positive, e.t, false);
                }
            }
            let e = g.edge(id);
            let cut = !h.positive_components().same(e.u, e.v);
            assert_eq!(cut, bridges.contains(&id), "edge {id}");
        }
    }

    #[test]
    fn switchable_counts() {
        let g = two_triangles(2);
        assert_eq!(count_switchable_sets(&g, 0).unwrap(), 0);
        assert_eq!(count_switchable_sets(&g, 1).unwrap(), 0);
        let path = graph(3, &[(0, 1, true), (1, 2, true)]);
        assert!(count_switchable_sets(&path, 1).unwrap() >= 1);
        assert_eq!(count_switchable_sets(&path, 1).unwrap(), 2);
        // Switching both edges of the path is also unnoticeable.
        assert_eq!(count_switchable_sets(&path, 2).unwrap(), 1);
        assert!(count_switchable_sets(&path, 3).is_err());
    }

    #[test]
    fn switchable_pairs_in_triangles() {
        // Brute-force oracle over all pairs with an independent checker:
        // consistent iff the positive components contain no negative edge.
        let g = two_triangles(2);
        let mut expected = 0;
        for i in 0..g.len() {
            for j in i + 1..g.len() {
                let mut h = g.clone();
                h.flip(i);
                h.flip(j);
                let d = h.positive_components();
                if h.edges().iter().all(|e| e.positive || !d.same(e.u, e.v)) {
                    expected += 1;
                }
            }
        }
        assert_eq!(count_switchable_sets(&g, 2).unwrap(), expected);
    }

    #[test]
    fn edge_limit() {
        let mut g = SignedGraph::new(2);
        for t in 0..65 {
            g.add(0, 1, true, t, false);
        }
        assert!(count_switchable_sets(&g, 1).is_err());
    }

    #[test]
    fn formulas() {
        assert_eq!(min_queries_k_robust(100, 4, 1), 112);
        assert_eq!(min_queries_k_robust(10, 1, 0), 5);
        assert!(min_queries_k_robust(10, 1, 0) < 9);
        assert_eq!(min_queries_k_robust(5, 1, 0), 3);
        assert!((c2_bound(310, 2, 2) - 348.75).abs() < 1e-12);
        assert!((c2_bound(100, 4, 1) - 300.0 / 14.0).abs() < 1e-12);
        let b: Vec<f64> = [2, 4, 8].iter().map(|&r| c2_bound(1000, r, r)).collect();
        assert!(b[0] < b[1] && b[1] < b[2]);
    }
}
