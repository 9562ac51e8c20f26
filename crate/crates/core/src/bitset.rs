/// Fixed-capacity bit set used for small dense graph algorithms.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Bits {
    words: Vec<u64>,
}

impl Bits {
    pub fn new(capacity: usize) -> Self {
        Bits {
            words: vec![0; capacity.div_ceil(64).max(1)],
        }
    }

    pub fn full(capacity: usize) -> Self {
        let mut b = Bits::new(capacity);
        for i in 0..capacity {
            b.insert(i);
        }
        b
    }

    #[inline]
    pub fn insert(&mut self, i: usize) {
        self.words[i / 64] |= 1 << (i % 64);
    }

    #[inline]
    pub fn remove(&mut self, i: usize) {
        self.words[i / 64] &= !(1 << (i % 64));
    }

    #[inline]
    pub fn contains(&self, i: usize) -> bool {
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn intersect(&self, other: &Bits) -> Bits {
        Bits {
            words: self
                .words
                .iter()
                .zip(&other.words)
                .map(|(a, b)| a & b)
                .collect(),
        }
    }

    pub fn union_with(&mut self, other: &Bits) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
    }

    pub fn difference_with(&mut self, other: &Bits) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= !b;
        }
    }

    pub fn intersects(&self, other: &Bits) -> bool {
        self.words.iter().zip(&other.words).any(|(a, b)| a & b != 0)
    }

    pub fn first(&self) -> Option<usize> {
        self.words
            .iter()
            .enumerate()
            .find(|(_, &w)| w != 0)
            .map(|(i, w)| i * 64 + w.trailing_zeros() as usize)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    None
                } else {
                    let t = w.trailing_zeros() as usize;
                    w &= w - 1;
                    Some(wi * 64 + t)
                }
            })
        })
    }
}

/// Undirected simple graph on `0..len` with bit-set adjacency.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitGraph {
    adj: Vec<Bits>,
}

impl BitGraph {
    pub fn new(len: usize) -> Self {
        BitGraph {
            adj: vec![Bits::new(len); len],
        }
    }

    pub fn from_edges(len: usize, edges: &[(usize, usize)]) -> Self {
        let mut g = BitGraph::new(len);
        for &(a, b) in edges {
            g.add_edge(a, b);
        }
        g
    }

    pub fn len(&self) -> usize {
        self.adj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adj.is_empty()
    }

    pub fn add_edge(&mut self, a: usize, b: usize) {
        debug_assert_ne!(a, b);
        self.adj[a].insert(b);
        self.adj[b].insert(a);
    }

    pub fn remove_edge(&mut self, a: usize, b: usize) {
        self.adj[a].remove(b);
        self.adj[b].remove(a);
    }

    #[inline]
    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adj[a].contains(b)
    }

    pub fn neighbors(&self, v: usize) -> &Bits {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].count()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Bits::count).sum::<usize>() / 2
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for a in 0..self.len() {
            for b in self.adj[a].iter().filter(|&b| b > a) {
                out.push((a, b));
            }
        }
        out
    }

    /// Vertices reachable from `start` without entering `blocked`.
    pub fn reachable_avoiding(&self, start: usize, blocked: &Bits) -> Bits {
        let mut seen = Bits::new(self.len());
        seen.insert(start);
        let mut frontier = seen.clone();
        loop {
            let mut next = Bits::new(self.len());
            for v in frontier.iter() {
                next.union_with(&self.adj[v]);
            }
            next.difference_with(blocked);
            next.difference_with(&seen);
            if next.is_empty() {
                return seen;
            }
            seen.union_with(&next);
            frontier = next;
        }
    }

    /// Induced subgraph on the vertices of `keep`, relabeled in increasing order.
    pub fn induced(&self, keep: &[usize]) -> BitGraph {
        let mut g = BitGraph::new(keep.len());
        for (i, &a) in keep.iter().enumerate() {
            for (j, &b) in keep.iter().enumerate().skip(i + 1) {
                if self.has_edge(a, b) {
                    g.add_edge(i, j);
                }
            }
        }
        g
    }
}
