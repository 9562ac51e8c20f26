use rand::{Rng, RngCore};

use super::chordal::preserves_chordality_bits;
use super::Strategy;
use crate::error::{Error, Result};
use crate::graph::AggregatedGraph;
use crate::partition::Query;

/// Uniform choice among the unknown super-vertex pairs whose negative answer
/// would keep the aggregated graph chordal.
#[derive(Debug, Clone, Default)]
pub struct ChordalAny;

impl ChordalAny {
    pub fn new() -> Self {
        ChordalAny
    }
}

/// All unknown super-vertex pairs passing the separator condition, as representatives.
pub fn chordal_candidates(g: &AggregatedGraph) -> Vec<Query> {
    let (reps, bits) = g.negative_graph();
    let mut out = Vec::new();
    for a in 0..reps.len() {
        for b in a + 1..reps.len() {
            if !bits.has_edge(a, b) && preserves_chordality_bits(&bits, a, b) {
                out.push(Query { u: reps[a], v: reps[b] });
            }
        }
    }
    out
}

impl Strategy for ChordalAny {
    fn name(&self) -> &'static str {
        "chordal-any"
    }

    fn next_query(&mut self, g: &AggregatedGraph, rng: &mut dyn RngCore) -> Result<Option<Query>> {
        if g.is_resolved() {
            return Ok(None);
        }
        let candidates = chordal_candidates(g);
        if candidates.is_empty() {
            return Err(Error::NoChordalCandidate);
        }
        Ok(Some(candidates[rng.random_range(0..candidates.len())]))
    }
}
