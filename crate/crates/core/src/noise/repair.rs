//! Divide-and-conquer localization of a wrong answer on a contradictory cycle.

use serde::Serialize;

use super::signed::{ContradictoryCycle, SignedGraph};
use crate::error::{Error, Result};
use crate::oracle::Oracle;
use crate::partition::{Answer, Query};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct CycleEdge {
    id: usize,
    positive: bool,
    suspect: bool,
}

/// What the repair needs next.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RepairStep {
    /// Ask this chord; its answer is trusted.
    Query(Query),
    /// Every other edge of the cycle is confirmed: this answer is wrong.
    Flip(usize),
}

/// Repair state for one contradictory cycle.
///
/// Every round asks the chord that splits the remaining suspects in half.
/// Exactly one of the two resulting cycles still has a single negative edge;
/// the search continues there until one suspect remains.
#[derive(Debug, Clone)]
pub struct RepairSession {
    vertices: Vec<usize>,
    edges: Vec<CycleEdge>,
    chord: Option<(usize, usize)>,
    queries: usize,
    initial_len: usize,
}

/// `ceil(log2(len))`, with 0 for `len <= 1`.
pub fn ceil_log2(len: usize) -> usize {
    if len <= 1 {
        0
    } else {
        (usize::BITS - (len - 1).leading_zeros()) as usize
    }
}

/// Repair queries allowed per cycle of length `len` before escalation.
pub fn repair_budget(len: usize) -> usize {
    4 * ceil_log2(len) + 8
}

impl RepairSession {
    pub fn new(cycle: &ContradictoryCycle, g: &SignedGraph) -> Self {
        let edges = cycle
            .edges
            .iter()
            .map(|&id| CycleEdge {
                id,
                positive: g.edge(id).positive,
                suspect: true,
            })
            .collect();
        RepairSession {
            vertices: cycle.vertices.clone(),
            edges,
            chord: None,
            queries: 0,
            initial_len: cycle.len(),
        }
    }

    pub fn queries(&self) -> usize {
        self.queries
    }

    pub fn initial_len(&self) -> usize {
        self.initial_len
    }

    pub fn suspects(&self) -> usize {
        self.edges.iter().filter(|e| e.suspect).count()
    }

    pub fn next(&mut self) -> RepairStep {
        let suspects: Vec<usize> = (0..self.edges.len()).filter(|&i| self.edges[i].suspect).collect();
        if suspects.len() == 1 {
            return RepairStep::Flip(self.edges[suspects[0]].id);
        }
        let (a, b) = match self.chord {
            Some(c) => c,
            None => {
                let h = suspects.len() / 2;
                let c = (suspects[0], suspects[h - 1] + 1);
                self.chord = Some(c);
                c
            }
        };
        RepairStep::Query(Query {
            u: self.vertices[a],
            v: self.vertices[b],
        })
    }

    /// Records the trusted answer to the pending chord, stored as edge `id`.
    pub fn answer(&mut self, positive: bool, id: usize) -> Result<()> {
        let (a, b) = self
            .chord
            .take()
            .ok_or_else(|| Error::Invalid("no chord query is pending".into()))?;
        self.queries += 1;
        let chord = CycleEdge {
            id,
            positive,
            suspect: false,
        };
        // Arc cycle: vertices a..=b, edges a..b, then the chord back to a.
        let arc_vertices = self.vertices[a..=b].to_vec();
        let mut arc_edges = self.edges[a..b].to_vec();
        arc_edges.push(chord);
        // Rest cycle: vertices b.., ..=a, edges b.., ..a, then the chord back to b.
        let mut rest_vertices = self.vertices[b..].to_vec();
        rest_vertices.extend_from_slice(&self.vertices[..=a]);
        let mut rest_edges = self.edges[b..].to_vec();
        rest_edges.extend_from_slice(&self.edges[..a]);
        rest_edges.push(chord);
        let negatives = |es: &[CycleEdge]| es.iter().filter(|e| !e.positive).count();
        if negatives(&arc_edges) == 1 {
            self.vertices = arc_vertices;
            self.edges = arc_edges;
        } else {
            debug_assert_eq!(negatives(&rest_edges), 1);
            self.vertices = rest_vertices;
            self.edges = rest_edges;
        }
        Ok(())
    }
}

/// Repair queries asked and answers corrected by [`repair`].
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RepairTranscript {
    pub queries: Vec<(Query, bool)>,
    /// Edge ids whose sign was flipped, in order.
    pub flipped: Vec<usize>,
}

/// Detects and repairs contradictions until none is left, asking chords of
/// `oracle`. Repair answers are appended to `g` with timestamps from `next_t`.
pub fn repair(g: &mut SignedGraph, oracle: &mut dyn Oracle, next_t: &mut u64) -> Result<RepairTranscript> {
    let mut transcript = RepairTranscript::default();
    while let Some(cycle) = g.detect_contradiction() {
        let budget = repair_budget(cycle.len());
        let mut session = RepairSession::new(&cycle, g);
        loop {
            match session.next() {
                RepairStep::Flip(id) => {
                    g.flip(id);
                    transcript.flipped.push(id);
                    break;
                }
                RepairStep::Query(q) => {
                    if session.queries() >= budget {
                        return Err(Error::Escalated(format!(
                            "repair of a {}-cycle exceeded {budget} queries",
                            cycle.len()
                        )));
                    }
                    let positive = oracle.answer(q);
                    let id = g.add(q.u, q.v, positive, *next_t, true);
                    *next_t += 1;
                    transcript.queries.push((q, positive));
                    session.answer(positive, id)?;
                }
            }
        }
        if transcript.flipped.len() > g.len() {
            return Err(Error::Escalated("repairs keep reappearing".into()));
        }
    }
    Ok(transcript)
}

/// Answer records for the repair queries of a transcript, starting at `t0`.
pub fn transcript_answers(t: &RepairTranscript, t0: u64) -> Vec<Answer> {
    t.queries
        .iter()
        .enumerate()
        .map(|(i, &(q, positive))| Answer {
            query: q,
            positive,
            t: t0 + i as u64,
            repair: true,
        })
        .collect()
}
