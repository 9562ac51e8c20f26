/// Disjoint-set forest with union by size and path compression.
///
/// Each set also tracks its smallest member, which is the public
/// representative of the set. The internal root is an implementation detail.
#[derive(Debug, Clone)]
pub struct DisjointSet {
    parent: Vec<usize>,
    size: Vec<usize>,
    min: Vec<usize>,
}

impl DisjointSet {
    pub fn new(n: usize) -> Self {
        DisjointSet {
            parent: (0..n).collect(),
            size: vec![1; n],
            min: (0..n).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    /// Root lookup without compression; depth is logarithmic under union by size.
    pub fn root(&self, mut x: usize) -> usize {
        while self.parent[x] != x {
            x = self.parent[x];
        }
        x
    }

    /// Root lookup with path compression.
    pub fn find(&mut self, x: usize) -> usize {
        let root = self.root(x);
        let mut cur = x;
        while self.parent[cur] != root {
            let next = self.parent[cur];
            self.parent[cur] = root;
            cur = next;
        }
        root
    }

    /// Smallest member of the set containing `x`.
    pub fn representative(&self, x: usize) -> usize {
        self.min[self.root(x)]
    }

    pub fn same(&self, a: usize, b: usize) -> bool {
        self.root(a) == self.root(b)
    }

    /// Size of the set whose root is `root`.
    pub fn root_size(&self, root: usize) -> usize {
        self.size[root]
    }

    pub fn root_min(&self, root: usize) -> usize {
        self.min[root]
    }

    /// Unites the sets of `a` and `b`; returns `(new_root, absorbed_root)`,
    /// or `None` if they were already together.
    pub fn union(&mut self, a: usize, b: usize) -> Option<(usize, usize)> {
        let ra = self.find(a);
        let rb = self.find(b);
        if ra == rb {
            return None;
        }
        let (big, small) = if self.size[ra] >= self.size[rb] {
            (ra, rb)
        } else {
            (rb, ra)
        };
        self.parent[small] = big;
        self.size[big] += self.size[small];
        self.min[big] = self.min[big].min(self.min[small]);
        Some((big, small))
    }
}
