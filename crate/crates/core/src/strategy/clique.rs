use rand::RngCore;

use super::Strategy;
use crate::error::Result;
use crate::graph::AggregatedGraph;
use crate::partition::Query;

/// Inserts items in increasing order, comparing each new item with one
/// representative of every discovered block, largest blocks first.
#[derive(Debug, Clone, Default)]
pub struct Clique {
    next: usize,
    // Representatives of the blocks holding the items before `next`.
    blocks: Vec<usize>,
    // `blocks` sorted by size descending, then representative ascending.
    order: Vec<usize>,
    pos: usize,
    started: bool,
}

impl Clique {
    pub fn new() -> Self {
        Self::default()
    }

    fn refresh(&mut self, g: &AggregatedGraph) {
        for b in &mut self.blocks {
            *b = g.rep(*b);
        }
        self.blocks.sort_unstable();
        self.blocks.dedup();
        self.order = self.blocks.clone();
        self.order
            .sort_by(|&a, &b| g.size(b).cmp(&g.size(a)).then(a.cmp(&b)));
        self.pos = 0;
    }

    fn finish_item(&mut self, g: &AggregatedGraph) {
        self.blocks.push(g.rep(self.next));
        self.next += 1;
        self.refresh(g);
    }
}

impl Strategy for Clique {
    fn name(&self) -> &'static str {
        "clique"
    }

    fn next_query(&mut self, g: &AggregatedGraph, _rng: &mut dyn RngCore) -> Result<Option<Query>> {
        if !self.started {
            self.started = true;
            self.refresh(g);
        }
        while self.next < g.n() {
            let x = self.next;
            while self.pos < self.order.len() {
                let b = self.order[self.pos];
                match g.relation(x, b) {
                    None => return Ok(Some(Query::new(x, b)?)),
                    Some(true) => break,
                    Some(false) => self.pos += 1,
                }
            }
            // Merged into a block, or separated from all of them.
            self.finish_item(g);
        }
        Ok(super::first_unknown_pair(g))
    }

    fn reset(&mut self) {
        *self = Self::default();
    }
}
