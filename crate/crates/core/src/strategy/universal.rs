use rand::RngCore;

use super::Strategy;
use crate::error::Result;
use crate::graph::AggregatedGraph;
use crate::partition::Query;

/// Repeatedly takes the largest remaining item as pivot and compares it with
/// every other remaining item, from the largest down; the pivot's block is
/// then removed.
#[derive(Debug, Clone, Default)]
pub struct Universal {
    // Remaining items, ascending; `None` until first use.
    remaining: Option<Vec<usize>>,
    pivot: Option<usize>,
    // Index in `remaining` of the next candidate (scanned downward).
    cursor: usize,
}

impl Universal {
    pub fn new() -> Self {
        Self::default()
    }
}

impl Strategy for Universal {
    fn name(&self) -> &'static str {
        "universal"
    }

    fn next_query(&mut self, g: &AggregatedGraph, _rng: &mut dyn RngCore) -> Result<Option<Query>> {
        let remaining = self.remaining.get_or_insert_with(|| (0..g.n()).collect());
        loop {
            let p = match self.pivot {
                Some(p) => p,
                None => match remaining.last() {
                    Some(&p) => {
                        self.pivot = Some(p);
                        self.cursor = remaining.len() - 1;
                        p
                    }
                    None => return Ok(super::first_unknown_pair(g)),
                },
            };
            while self.cursor > 0 {
                self.cursor -= 1;
                let j = remaining[self.cursor];
                if !g.is_known(p, j) {
                    // Revisit this index after the answer.
                    self.cursor += 1;
                    return Ok(Some(Query::new(p, j)?));
                }
            }
            // The pivot's relation to every remaining item is known.
            remaining.retain(|&j| !g.same_supervertex(p, j));
            self.pivot = None;
        }
    }

    fn reset(&mut self) {
        *self = Self::default();
    }
}
