//! Brute-force optimum of the average query count over all algorithms.

use std::collections::HashMap;

use num_bigint::BigUint;
use num_rational::BigRational;

use crate::bitset::BitGraph;
use crate::error::{Error, Result};
use crate::exact::bell;
use crate::graph::count_independent_partitions;

/// Largest `n` accepted by [`optimal_average_game_tree`].
pub const GAME_TREE_N: usize = 5;

/// Minimal expected number of queries over all algorithms on a uniformly
/// random partition of `0..n`.
///
/// A state is the negative graph on super-vertices (sizes are irrelevant to
/// both the realizations and the remaining cost). With `R(G)` realizations,
/// the summed cost over realizations obeys
/// `T(G) = min over non-edges ab of R(G) + T(G/ab) + T(G + ab)`, and the
/// answer is `T(G_0) / B_n`.
pub fn optimal_average_game_tree(n: usize) -> Result<BigRational> {
    if n > GAME_TREE_N {
        return Err(Error::LimitExceeded {
            what: "game-tree n",
            value: n,
            limit: GAME_TREE_N,
        });
    }
    if n == 0 {
        return Err(Error::EmptyGround);
    }
    let mut memo = HashMap::new();
    let total = solve(&Small::empty(n), &mut memo);
    Ok(BigRational::new(
        BigUint::from(total).into(),
        bell(n).into(),
    ))
}

/// Graph on at most 8 vertices as an upper-triangle bitmask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct Small {
    len: usize,
    mask: u32,
}

fn bit(a: usize, b: usize) -> u32 {
    let (a, b) = (a.min(b), a.max(b));
    1 << (b * (b - 1) / 2 + a)
}

impl Small {
    fn empty(len: usize) -> Self {
        Small { len, mask: 0 }
    }

    fn has(&self, a: usize, b: usize) -> bool {
        self.mask & bit(a, b) != 0
    }

    fn with_edge(&self, a: usize, b: usize) -> Self {
        Small {
            len: self.len,
            mask: self.mask | bit(a, b),
        }
    }

    /// Contracts `b` into `a` and relabels the remaining vertices.
    fn contract(&self, a: usize, b: usize) -> Self {
        let keep: Vec<usize> = (0..self.len).filter(|&v| v != b).collect();
        let mut out = Small::empty(self.len - 1);
        for (i, &x) in keep.iter().enumerate() {
            for (j, &y) in keep.iter().enumerate().skip(i + 1) {
                let adj = self.has(x, y)
                    || (x == a && self.has(b, y))
                    || (y == a && self.has(b, x));
                if adj {
                    out.mask |= bit(i, j);
                }
            }
        }
        out
    }

    fn is_complete(&self) -> bool {
        self.mask.count_ones() as usize == self.len * self.len.saturating_sub(1) / 2
    }

    /// Smallest mask over all vertex relabelings.
    fn canonical(&self) -> Self {
        let mut perm: Vec<usize> = (0..self.len).collect();
        let mut best = u32::MAX;
        permute(&mut perm, 0, &mut |p| {
            let mut m = 0;
            for a in 0..self.len {
                for b in a + 1..self.len {
                    if self.has(a, b) {
                        m |= bit(p[a], p[b]);
                    }
                }
            }
            best = best.min(m);
        });
        Small {
            len: self.len,
            mask: best,
        }
    }

    fn realizations(&self) -> u64 {
        let mut g = BitGraph::new(self.len);
        for a in 0..self.len {
            for b in a + 1..self.len {
                if self.has(a, b) {
                    g.add_edge(a, b);
                }
            }
        }
        count_independent_partitions(&g)
    }
}

fn permute(p: &mut Vec<usize>, k: usize, f: &mut impl FnMut(&[usize])) {
    if k == p.len() {
        f(p);
        return;
    }
    for i in k..p.len() {
        p.swap(k, i);
        permute(p, k + 1, f);
        p.swap(k, i);
    }
}

fn solve(g: &Small, memo: &mut HashMap<Small, u64>) -> u64 {
    if g.is_complete() {
        return 0;
    }
    let key = g.canonical();
    if let Some(&v) = memo.get(&key) {
        return v;
    }
    let r = g.realizations();
    let mut best = u64::MAX;
    for a in 0..g.len {
        for b in a + 1..g.len {
            if !g.has(a, b) {
                let cost = r + solve(&g.contract(a, b), memo) + solve(&g.with_edge(a, b), memo);
                best = best.min(cost);
            }
        }
    }
    memo.insert(key, best);
    best
}
