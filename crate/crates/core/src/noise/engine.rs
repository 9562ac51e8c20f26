//! Query loop with contradiction detection, repair and optional redundancy.

use std::collections::VecDeque;

use serde::Serialize;

use super::planner::{closure_queries, cross_queries, PlanForest, RedundancyPlan, CROSS_TARGET};
use super::repair::{repair_budget, RepairSession, RepairStep};
use super::signed::{ContradictoryCycle, SignedGraph};
use crate::error::{Error, Result};
use crate::graph::{AggregatedGraph, Applied};
use crate::oracle::Oracle;
use crate::partition::{Answer, Partition, Query, QueryLog};
use crate::rng::stream_rng;
use crate::strategy::{default_budget, is_chordal_graph, preserves_chordality, Strategy};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum QueryKind {
    Strategy,
    Repair,
    Closure,
    CrossTopUp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PlannedQuery {
    pub query: Query,
    pub kind: QueryKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Step {
    Query(PlannedQuery),
    Done,
    Escalated(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Active,
    Repairing,
    Resolved,
    Escalated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    Search,
    Finalize,
    Done,
}

/// What one answer changed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Delta {
    Merged { rep: usize, absorbed: usize },
    Separated { a: usize, b: usize },
    /// Agrees with what was already known.
    Redundant,
    /// Disagrees with what was known; a repair starts.
    Contradiction { cycle: ContradictoryCycle },
    /// A trusted repair answer.
    Repair { suspects: usize },
}

/// An earlier answer whose sign the repair reversed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Correction {
    pub t: u64,
    pub u: usize,
    pub v: usize,
    pub now_positive: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SubmitReport {
    pub answer: Answer,
    pub delta: Delta,
    pub corrections: Vec<Correction>,
    /// A further contradiction found right after a correction.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub next_contradiction: Option<ContradictoryCycle>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct KindCounts {
    pub strategy: usize,
    pub repair: usize,
    pub closure: usize,
    pub cross: usize,
}

impl KindCounts {
    fn add(&mut self, kind: QueryKind) {
        match kind {
            QueryKind::Strategy => self.strategy += 1,
            QueryKind::Repair => self.repair += 1,
            QueryKind::Closure => self.closure += 1,
            QueryKind::CrossTopUp => self.cross += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.strategy + self.repair + self.closure + self.cross
    }
}

/// Strategy-driven clustering that tolerates wrong answers.
///
/// The search asks the strategy's queries (with endpoints chosen by the plan
/// when there is one). Answers that disagree with the current knowledge start
/// a repair on the shortest contradictory cycle. With a plan, finalization
/// adds closure and cross-component queries so single errors surface.
///
/// The engine is a pure function of its answer sequence: replaying a log
/// reproduces the same proposals.
pub struct RobustEngine {
    n: usize,
    seed: u64,
    strategy: Box<dyn Strategy>,
    forest: Option<PlanForest>,
    signed: SignedGraph,
    agg: AggregatedGraph,
    log: QueryLog,
    phase: Phase,
    repair: Option<RepairSession>,
    pending: Option<PlannedQuery>,
    queue: VecDeque<PlannedQuery>,
    budget: usize,
    escalated: Option<String>,
    counts: KindCounts,
    flips: usize,
}

impl std::fmt::Debug for RobustEngine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RobustEngine")
            .field("n", &self.n)
            .field("strategy", &self.strategy.name())
            .field("answers", &self.log.len())
            .field("phase", &self.phase)
            .field("status", &self.status())
            .finish()
    }
}

impl RobustEngine {
    pub fn new(n: usize, strategy: Box<dyn Strategy>, plan: Option<RedundancyPlan>, seed: u64) -> Result<Self> {
        if let Some(p) = &plan {
            p.validate()?;
        }
        Ok(RobustEngine {
            n,
            seed,
            strategy,
            forest: plan.map(PlanForest::new),
            signed: SignedGraph::new(n),
            agg: AggregatedGraph::new(n)?,
            log: QueryLog::new(n),
            phase: Phase::Search,
            repair: None,
            pending: None,
            queue: VecDeque::new(),
            budget: default_budget(n) + 64,
            escalated: None,
            counts: KindCounts::default(),
            flips: 0,
        })
    }

    /// Rebuilds an engine by feeding it `log` in order.
    pub fn replay(log: &QueryLog, strategy: Box<dyn Strategy>, plan: Option<RedundancyPlan>, seed: u64) -> Result<Self> {
        let mut e = RobustEngine::new(log.n(), strategy, plan, seed)?;
        for a in log.answers() {
            let report = e.submit_at(a.query, a.positive, Some(a.t))?;
            if report.answer.repair != a.repair {
                return Err(Error::Invalid(format!("answer at t={} has a mismatched repair flag", a.t)));
            }
        }
        e.next()?;
        Ok(e)
    }

    pub fn with_budget(mut self, budget: usize) -> Self {
        self.budget = budget;
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn strategy_name(&self) -> &'static str {
        self.strategy.name()
    }

    pub fn plan(&self) -> Option<RedundancyPlan> {
        self.forest.as_ref().map(PlanForest::plan)
    }

    pub fn log(&self) -> &QueryLog {
        &self.log
    }

    pub fn signed(&self) -> &SignedGraph {
        &self.signed
    }

    pub fn aggregated(&self) -> &AggregatedGraph {
        &self.agg
    }

    pub fn partition(&self) -> Partition {
        self.agg.partition()
    }

    pub fn counts(&self) -> KindCounts {
        self.counts
    }

    pub fn flips(&self) -> usize {
        self.flips
    }

    pub fn status(&self) -> Status {
        if self.escalated.is_some() {
            Status::Escalated
        } else if self.repair.is_some() {
            Status::Repairing
        } else if self.phase == Phase::Done {
            Status::Resolved
        } else {
            Status::Active
        }
    }

    /// Whether the engine is in its plain search phase with no repair open,
    /// so that extra answers to unknown pairs are accepted.
    pub fn accepts_extra_answers(&self) -> bool {
        self.escalated.is_none() && self.repair.is_none() && self.phase == Phase::Search
    }

    fn escalate(&mut self, why: String) -> Step {
        self.pending = None;
        self.escalated = Some(why.clone());
        Step::Escalated(why)
    }

    /// The pending query, computing it if needed. Idempotent until answered.
    pub fn next(&mut self) -> Result<Step> {
        if let Some(why) = &self.escalated {
            return Ok(Step::Escalated(why.clone()));
        }
        if let Some(p) = self.pending {
            return Ok(Step::Query(p));
        }
        if self.log.len() >= self.budget {
            return Ok(self.escalate(format!("query budget of {} exhausted", self.budget)));
        }
        if let Some(session) = &mut self.repair {
            let budget = repair_budget(session.initial_len());
            if session.queries() >= budget {
                let len = session.initial_len();
                return Ok(self.escalate(format!("repair of a {len}-cycle exceeded {budget} queries")));
            }
            return match session.next() {
                RepairStep::Query(query) => {
                    let p = PlannedQuery {
                        query,
                        kind: QueryKind::Repair,
                    };
                    self.pending = Some(p);
                    Ok(Step::Query(p))
                }
                RepairStep::Flip(_) => unreachable!("flips are applied as soon as they are known"),
            };
        }
        if self.phase == Phase::Search {
            let mut rng = stream_rng(self.seed, self.log.len() as u64);
            match self.strategy.next_query(&self.agg, &mut rng)? {
                Some(q) => {
                    let query = match &mut self.forest {
                        Some(f) => f.choose_endpoints(&self.agg, &self.signed, q),
                        None => q,
                    };
                    let p = PlannedQuery {
                        query,
                        kind: QueryKind::Strategy,
                    };
                    self.pending = Some(p);
                    return Ok(Step::Query(p));
                }
                None => self.phase = Phase::Finalize,
            }
        }
        if self.phase == Phase::Finalize {
            if self.queue.is_empty() && self.forest.is_some() {
                self.queue.extend(closure_queries(&self.signed).into_iter().map(|query| PlannedQuery {
                    query,
                    kind: QueryKind::Closure,
                }));
                self.queue
                    .extend(cross_queries(&self.signed, &self.agg, CROSS_TARGET).into_iter().map(|query| {
                        PlannedQuery {
                            query,
                            kind: QueryKind::CrossTopUp,
                        }
                    }));
            }
            match self.queue.pop_front() {
                Some(p) => {
                    self.pending = Some(p);
                    return Ok(Step::Query(p));
                }
                None => self.phase = Phase::Done,
            }
        }
        Ok(Step::Done)
    }

    /// Records the answer to the pending query, or to any unknown pair while
    /// the search accepts extra answers.
    pub fn submit(&mut self, q: Query, positive: bool) -> Result<SubmitReport> {
        self.submit_at(q, positive, None)
    }

    fn submit_at(&mut self, q: Query, positive: bool, t: Option<u64>) -> Result<SubmitReport> {
        for item in [q.u, q.v] {
            if item >= self.n {
                return Err(Error::ItemOutOfRange { item, n: self.n });
            }
        }
        if q.u == q.v {
            return Err(Error::SelfQuery(q.u));
        }
        let step = self.next()?;
        let extra = !matches!(&step, Step::Query(p) if p.query.same_pair(q));
        let kind = match step {
            Step::Query(p) if p.query.same_pair(q) => p.kind,
            Step::Query(_) if self.accepts_extra_answers() && self.agg.relation(q.u, q.v).is_none() => QueryKind::Strategy,
            Step::Query(_) => return Err(Error::Invalid(format!("({}, {}) is not the pending query", q.u, q.v))),
            Step::Done => return Err(Error::Invalid("all queries are answered".into())),
            Step::Escalated(why) => return Err(Error::Escalated(why)),
        };
        // An extra answer leaves the pending query in place while it stays open.
        let kept = if extra { self.pending.take() } else { None };
        self.pending = None;
        let mut answer = Answer::new(q, positive, t.unwrap_or_else(|| self.log.next_t()));
        answer.repair = kind == QueryKind::Repair;
        self.log.push(answer)?;
        let id = self.signed.add(q.u, q.v, positive, answer.t, answer.repair);
        self.counts.add(kind);
        let mut report = SubmitReport {
            answer,
            delta: Delta::Redundant,
            corrections: Vec::new(),
            next_contradiction: None,
        };
        if kind == QueryKind::Repair {
            let session = self.repair.as_mut().expect("repair queries need a session");
            session.answer(positive, id)?;
            report.delta = Delta::Repair {
                suspects: session.suspects(),
            };
            if let RepairStep::Flip(eid) = session.next() {
                self.repair = None;
                self.signed.flip(eid);
                self.flips += 1;
                let e = *self.signed.edge(eid);
                report.corrections.push(Correction {
                    t: e.t,
                    u: e.u,
                    v: e.v,
                    now_positive: e.positive,
                });
                report.next_contradiction = self.after_correction()?;
            }
            return Ok(report);
        }
        match self.agg.relation(q.u, q.v) {
            None => {
                let (ra, rb) = (self.agg.rep(q.u), self.agg.rep(q.v));
                report.delta = match self.agg.observe(q, positive)? {
                    Applied::Merged { rep, absorbed } => {
                        if let Some(f) = &mut self.forest {
                            f.on_merge(ra, rb, rep, q);
                        }
                        Delta::Merged { rep, absorbed }
                    }
                    Applied::Separated { a, b } => Delta::Separated { a, b },
                    Applied::Redundant => Delta::Redundant,
                };
            }
            Some(known) if known == positive => {}
            Some(_) => {
                let cycle = self
                    .signed
                    .detect_contradiction()
                    .expect("a disagreeing answer closes a contradictory cycle");
                self.repair = Some(RepairSession::new(&cycle, &self.signed));
                report.delta = Delta::Contradiction { cycle };
            }
        }
        // A kept query must still be unknown, and still chordality-preserving
        // when the graph is chordal after the extra answer.
        self.pending = kept.filter(|p| {
            self.agg.relation(p.query.u, p.query.v).is_none()
                && (!is_chordal_graph(&self.agg) || preserves_chordality(&self.agg, p.query).unwrap_or(false))
        });
        Ok(report)
    }

    /// Re-derives knowledge from the corrected answers.
    fn after_correction(&mut self) -> Result<Option<ContradictoryCycle>> {
        if self.flips > self.log.len() {
            self.escalated = Some("corrections keep reappearing".into());
            return Ok(None);
        }
        if let Some(cycle) = self.signed.detect_contradiction() {
            self.repair = Some(RepairSession::new(&cycle, &self.signed));
            return Ok(Some(cycle));
        }
        self.agg = self.signed.to_aggregated()?;
        if let Some(f) = &mut self.forest {
            f.rebuild(&self.agg);
        }
        self.strategy.reset();
        self.queue.clear();
        self.phase = Phase::Search;
        Ok(None)
    }
}

/// Outcome of driving a [`RobustEngine`] against an oracle.
#[derive(Debug, Clone, Serialize)]
pub struct RobustRun {
    pub partition: Partition,
    pub queries: usize,
    pub counts: KindCounts,
    pub flips: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub escalated: Option<String>,
}

/// Answers the engine's queries with `oracle` until it finishes or escalates.
pub fn run_robust(engine: &mut RobustEngine, oracle: &mut dyn Oracle) -> Result<RobustRun> {
    let escalated = loop {
        match engine.next()? {
            Step::Query(p) => {
                let positive = oracle.answer(p.query);
                engine.submit(p.query, positive)?;
            }
            Step::Done => break None,
            Step::Escalated(why) => break Some(why),
        }
    };
    Ok(RobustRun {
        partition: engine.partition(),
        queries: engine.log().len(),
        counts: engine.counts(),
        flips: engine.flips(),
        escalated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{NoiseModel, NoisyOracle, TruthOracle};
    use crate::partition::all_partitions;
    use crate::strategy::StrategyKind;

    fn engine(n: usize, plan: Option<usize>) -> RobustEngine {
        RobustEngine::new(
            n,
            StrategyKind::Clique.build(),
            plan.map(|r| RedundancyPlan::new(r).unwrap()),
            5,
        )
        .unwrap()
    }

    #[test]
    fn noiseless_without_plan_matches_plain_run() {
        for truth in all_partitions(5) {
            let mut e = engine(5, None);
            let run = run_robust(&mut e, &mut TruthOracle { truth: &truth }).unwrap();
            assert_eq!(run.partition, truth);
            assert_eq!(run.counts.total(), run.counts.strategy);
            let mut s = StrategyKind::Clique.build();
            let plain = crate::strategy::run(
                s.as_mut(),
                &mut TruthOracle { truth: &truth },
                5,
                &mut stream_rng(0, 0),
                Default::default(),
            )
            .unwrap();
            assert_eq!(plain.queries, run.queries);
        }
    }

    #[test]
    fn noiseless_with_plan_recovers_and_is_robust() {
        for truth in all_partitions(6) {
            let mut e = engine(6, Some(2));
            let run = run_robust(&mut e, &mut TruthOracle { truth: &truth }).unwrap();
            assert_eq!(run.partition, truth);
            assert_eq!(run.flips, 0);
            assert!(super::super::robust::verify_k_robust(e.signed(), 1), "{truth}");
        }
    }

    #[test]
    fn next_is_idempotent_and_rejects_strangers() {
        let mut e = engine(3, None);
        let a = e.next().unwrap();
        assert_eq!(a, e.next().unwrap());
        let Step::Query(p) = a else { panic!() };
        assert_eq!(p.query.key(), (0, 1));
        // An unknown pair other than the pending one counts as an extra answer.
        assert!(e.submit(Query { u: 2, v: 0 }, false).is_ok());
        e.submit(Query { u: 1, v: 0 }, true).unwrap();
        assert!(e.submit(Query { u: 1, v: 0 }, true).is_err());
    }

    #[test]
    fn extra_answer_keeps_pending_query() {
        let mut e = engine(4, None);
        let Step::Query(p) = e.next().unwrap() else { panic!() };
        e.submit(Query { u: 2, v: 3 }, false).unwrap();
        assert_eq!(e.next().unwrap(), Step::Query(p));
        // An extra answer that settles the pending pair drops it.
        e.submit(Query { u: 1, v: 2 }, true).unwrap();
        e.submit(Query { u: 0, v: 2 }, true).unwrap();
        match e.next().unwrap() {
            Step::Query(q) => assert_ne!(q.query.key(), p.query.key()),
            Step::Done => {}
            s => panic!("{s:?}"),
        }
    }

    #[test]
    fn wrong_answer_is_repaired() {
        // Two blocks of four; the first answer joining item 1 is wrong.
        let truth = Partition::from_blocks(8, vec![vec![0, 1, 2, 3], vec![4, 5, 6, 7]]).unwrap();
        let mut e = engine(8, Some(2));
        let mut first = true;
        let mut oracle = |q: Query| {
            let t = truth.same_block(q.u, q.v);
            if first && q.key() == (0, 1) {
                first = false;
                !t
            } else {
                t
            }
        };
        let run = run_robust(&mut e, &mut oracle).unwrap();
        assert_eq!(run.partition, truth);
        assert_eq!(run.flips, 1);
        assert!(run.counts.repair >= 1);
        assert!(e.log().answers().iter().any(|a| a.repair));
    }

    #[test]
    fn replay_reproduces_state() {
        let truth = Partition::from_labels(&[0, 1, 0, 2, 1, 0, 2, 2, 1, 0, 3, 3]);
        let noise = NoiseModel::new(0.1, 9).unwrap();
        let mut e = engine(12, Some(3));
        let run = run_robust(&mut e, &mut NoisyOracle::new(&truth, noise, stream_rng(9, 0))).unwrap();
        let r = RobustEngine::replay(e.log(), StrategyKind::Clique.build(), Some(RedundancyPlan::new(3).unwrap()), 5).unwrap();
        assert_eq!(r.partition(), run.partition);
        assert_eq!(r.status(), e.status());
        assert_eq!(r.counts(), e.counts());
        assert_eq!(r.flips(), e.flips());
    }

    #[test]
    fn budget_escalates() {
        let truth = Partition::singletons(6);
        let mut e = engine(6, None).with_budget(3);
        let run = run_robust(&mut e, &mut TruthOracle { truth: &truth }).unwrap();
        assert!(run.escalated.is_some());
        assert_eq!(e.status(), Status::Escalated);
    }
}
