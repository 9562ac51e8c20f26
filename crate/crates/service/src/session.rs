//! One annotation session: the robust engine plus per-annotator bookkeeping.
//!
//! Nothing here touches the disk. The caller persists the answers a submit
//! returns before acknowledging it.

use std::collections::{BTreeMap, HashSet};

use acluster_core::exact::{asymptotic_moments, exact_moments};
use acluster_core::noise::{Correction, Delta, KindCounts, QueryKind, RedundancyPlan, RobustEngine, Status, Step};
use acluster_core::strategy::{chordal_candidates, is_chordal_graph, StrategyKind};
use acluster_core::{stream_rng, AggregatedGraph, Answer, Error as CoreError, Partition, Query, QueryLog};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ServiceError, ServiceResult};

/// Largest session for which the progress hint uses the exact mean.
pub const EXACT_HINT_LIMIT: usize = 256;

/// Stream offset for extra-query draws, kept clear of the engine's streams.
const EXTRA_STREAM: u64 = 1 << 40;

/// An external item: an identifier plus an opaque display payload.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Item {
    pub id: String,
    #[serde(default)]
    pub payload: String,
}

#[derive(Debug, Clone, Deserialize)]
pub struct CreateSession {
    pub items: Vec<Item>,
    pub strategy: String,
    #[serde(default)]
    pub plan: Option<RedundancyPlan>,
    #[serde(default)]
    pub seed: Option<u64>,
}

/// The immutable part of a session, persisted once at creation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionMeta {
    pub id: String,
    pub items: Vec<Item>,
    pub strategy: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plan: Option<RedundancyPlan>,
    pub seed: u64,
}

impl SessionMeta {
    pub fn validate(&self) -> ServiceResult<StrategyKind> {
        if self.items.is_empty() {
            return Err(ServiceError::Validation("a session needs at least one item".into()));
        }
        let mut seen = HashSet::new();
        for item in &self.items {
            if item.id.is_empty() {
                return Err(ServiceError::Validation("item ids must be non-empty".into()));
            }
            if !seen.insert(item.id.as_str()) {
                return Err(ServiceError::Validation(format!("duplicate item id `{}`", item.id)));
            }
        }
        let kind: StrategyKind = self.strategy.parse()?;
        if let Some(p) = &self.plan {
            p.validate().map_err(|e| ServiceError::Validation(e.to_string()))?;
        }
        Ok(kind)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ItemView {
    pub index: usize,
    pub id: String,
    pub payload: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct QueryView {
    pub u: usize,
    pub v: usize,
    pub purpose: QueryKind,
    pub items: [ItemView; 2],
}

/// What an annotator should do next.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum NextResponse {
    Query { query: QueryView, status: Status },
    /// No query can be handed out safely until another annotator answers.
    Wait,
    Resolved { labeled: bool },
    Escalated { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubmitResponse {
    pub answer: Answer,
    pub delta: Delta,
    pub corrections: Vec<Correction>,
    pub status: Status,
    /// The repair query, handed to the submitting annotator.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub repair_query: Option<QueryView>,
}

/// A submit's result together with the log lines it produced.
#[derive(Debug, Clone)]
pub struct SubmitOutcome {
    pub response: SubmitResponse,
    pub appended: Vec<Answer>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BlockView {
    /// Id of the block's smallest-index item; labels are keyed by it.
    pub key: String,
    pub members: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    /// Mean chordal query count for a uniformly random partition of `n` items.
    pub expected_total: f64,
    pub estimated_remaining: f64,
    pub exact: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SessionView {
    pub id: String,
    pub status: Status,
    pub n: usize,
    pub strategy: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub plan: Option<RedundancyPlan>,
    pub answered: usize,
    pub counts: KindCounts,
    pub flips: usize,
    pub outstanding: usize,
    pub blocks: Vec<BlockView>,
    pub estimate: Estimate,
    pub labeled: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub escalation: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExportItem {
    pub id: String,
    pub payload: String,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExportBlock {
    pub key: String,
    pub label: String,
    pub members: Vec<String>,
}

/// The final labeled clustering and its complete audit log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Export {
    pub session: String,
    pub strategy: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plan: Option<RedundancyPlan>,
    pub seed: u64,
    pub items: Vec<ExportItem>,
    pub blocks: Vec<ExportBlock>,
    pub log: Vec<Answer>,
}

impl Export {
    /// The partition obtained by replaying the exported log.
    pub fn replay(&self) -> ServiceResult<Partition> {
        let mut log = QueryLog::new(self.items.len());
        for a in &self.log {
            log.push(*a)?;
        }
        let kind: StrategyKind = self.strategy.parse()?;
        let e = RobustEngine::replay(&log, kind.build(), self.plan, self.seed)?;
        Ok(e.partition())
    }
}

pub struct Session {
    meta: SessionMeta,
    kind: StrategyKind,
    engine: RobustEngine,
    /// Annotator token to the query it holds.
    assignments: BTreeMap<String, Query>,
    labels: Option<BTreeMap<String, String>>,
    expected_total: f64,
    exact_hint: bool,
}

impl std::fmt::Debug for Session {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Session")
            .field("id", &self.meta.id)
            .field("engine", &self.engine)
            .field("assignments", &self.assignments)
            .finish()
    }
}

impl Session {
    pub fn new(meta: SessionMeta) -> ServiceResult<Self> {
        Session::restore(meta, &[], BTreeMap::new(), None)
    }

    /// Rebuilds a session by replaying its persisted answers.
    pub fn restore(
        meta: SessionMeta,
        log: &[Answer],
        assignments: BTreeMap<String, Query>,
        labels: Option<BTreeMap<String, String>>,
    ) -> ServiceResult<Self> {
        let kind = meta.validate()?;
        let n = meta.items.len();
        let mut qlog = QueryLog::new(n);
        for a in log {
            qlog.push(*a).map_err(|e| ServiceError::Storage(e.to_string()))?;
        }
        let engine = RobustEngine::replay(&qlog, kind.build(), meta.plan, meta.seed).map_err(|e| match e {
            CoreError::Invalid(m) | CoreError::MalformedLog { message: m, .. } => ServiceError::Storage(m),
            other => other.into(),
        })?;
        let (expected_total, exact_hint) = if n <= EXACT_HINT_LIMIT {
            (exact_moments(n).mean_f64(), true)
        } else {
            (asymptotic_moments(n as f64).mean, false)
        };
        let mut s = Session {
            meta,
            kind,
            engine,
            assignments,
            labels,
            expected_total,
            exact_hint,
        };
        s.prune();
        Ok(s)
    }

    pub fn id(&self) -> &str {
        &self.meta.id
    }

    pub fn meta(&self) -> &SessionMeta {
        &self.meta
    }

    pub fn n(&self) -> usize {
        self.meta.items.len()
    }

    pub fn status(&self) -> Status {
        self.engine.status()
    }

    pub fn log(&self) -> &QueryLog {
        self.engine.log()
    }

    pub fn aggregated(&self) -> &AggregatedGraph {
        self.engine.aggregated()
    }

    pub fn assignments(&self) -> &BTreeMap<String, Query> {
        &self.assignments
    }

    pub fn labels(&self) -> Option<&BTreeMap<String, String>> {
        self.labels.as_ref()
    }

    /// Handed-out queries that are still unanswered.
    pub fn outstanding(&self) -> Vec<Query> {
        let mut out: Vec<Query> = Vec::new();
        for &q in self.assignments.values() {
            if !out.iter().any(|o| o.same_pair(q)) {
                out.push(q);
            }
        }
        out
    }

    /// Whether several annotators may hold queries at once: chordal-any
    /// without a redundancy plan, in the plain search phase. Chordal-any is
    /// the one strategy whose proposals stay chordality-preserving after
    /// answers it did not ask for.
    fn parallel(&self) -> bool {
        self.kind == StrategyKind::ChordalAny && self.meta.plan.is_none() && self.engine.accepts_extra_answers()
    }

    fn pending(&mut self) -> ServiceResult<Step> {
        Ok(self.engine.next()?)
    }

    /// Drops assignments that are answered or settled.
    fn prune(&mut self) {
        let pending = match self.engine.next() {
            Ok(Step::Query(p)) => Some(p.query),
            _ => None,
        };
        let parallel = self.parallel();
        let agg = self.engine.aggregated();
        self.assignments.retain(|_, q| {
            q.u < agg.n()
                && q.v < agg.n()
                && q.u != q.v
                && agg.relation(q.u, q.v).is_none()
                && (pending.is_some_and(|p| p.same_pair(*q)) || parallel)
        });
    }

    /// The current graph with every query in `extra` answered negatively,
    /// or `None` when one of them is known to be positive. Two queries may
    /// name the same super-vertex pair after a merge.
    fn with_negatives(&self, extra: &[Query]) -> Option<AggregatedGraph> {
        let mut g = self.engine.aggregated().clone();
        for &q in extra {
            match g.relation(q.u, q.v) {
                None => {
                    g.observe(q, false).ok()?;
                }
                Some(false) => {}
                Some(true) => return None,
            }
        }
        Some(g)
    }

    fn query_view(&self, q: Query, purpose: QueryKind) -> QueryView {
        let item = |i: usize| ItemView {
            index: i,
            id: self.meta.items[i].id.clone(),
            payload: self.meta.items[i].payload.clone(),
        };
        QueryView {
            u: q.u,
            v: q.v,
            purpose,
            items: [item(q.u), item(q.v)],
        }
    }

    fn purpose(&mut self, q: Query) -> QueryKind {
        match self.engine.next() {
            Ok(Step::Query(p)) if p.query.same_pair(q) => p.kind,
            _ => QueryKind::Strategy,
        }
    }

    /// The query for `token`, assigning one if it holds none. Idempotent
    /// until the held query is answered.
    ///
    /// The strategy's pending query goes to the first annotator who asks.
    /// Others get a pair that keeps the graph chordal even if every
    /// outstanding query, the pending one included, is answered negatively.
    pub fn next(&mut self, token: &str) -> ServiceResult<NextResponse> {
        let p = match self.pending()? {
            Step::Query(p) => p,
            Step::Done => {
                return Ok(NextResponse::Resolved {
                    labeled: self.labels.is_some(),
                })
            }
            Step::Escalated(reason) => return Ok(NextResponse::Escalated { reason }),
        };
        self.prune();
        let status = self.status();
        if let Some(&q) = self.assignments.get(token) {
            let purpose = self.purpose(q);
            return Ok(NextResponse::Query {
                query: self.query_view(q, purpose),
                status,
            });
        }
        let held = self.outstanding();
        if !held.iter().any(|q| q.same_pair(p.query)) {
            let mut all = held.clone();
            all.push(p.query);
            let safe = held.is_empty() || self.with_negatives(&all).is_some_and(|g| is_chordal_graph(&g));
            if safe {
                self.assignments.insert(token.to_string(), p.query);
                return Ok(NextResponse::Query {
                    query: self.query_view(p.query, p.kind),
                    status,
                });
            }
        }
        if let Some(q) = self.safe_extra(&held, p.query) {
            self.assignments.insert(token.to_string(), q);
            return Ok(NextResponse::Query {
                query: self.query_view(q, QueryKind::Strategy),
                status,
            });
        }
        Ok(NextResponse::Wait)
    }

    fn safe_extra(&self, held: &[Query], pending: Query) -> Option<Query> {
        if !self.parallel() {
            return None;
        }
        let mut all = held.to_vec();
        if !all.iter().any(|q| q.same_pair(pending)) {
            all.push(pending);
        }
        let g = self.with_negatives(&all)?;
        if !is_chordal_graph(&g) {
            return None;
        }
        let candidates = chordal_candidates(&g);
        if candidates.is_empty() {
            return None;
        }
        let mut rng = stream_rng(self.meta.seed, EXTRA_STREAM + self.log().len() as u64 * 64 + held.len() as u64);
        Some(candidates[rng.random_range(0..candidates.len())])
    }

    /// Records an answer to the pending query or to an outstanding one.
    pub fn submit(&mut self, token: &str, q: Query, positive: bool) -> ServiceResult<SubmitOutcome> {
        let n = self.n();
        for item in [q.u, q.v] {
            if item >= n {
                return Err(ServiceError::Validation(format!("item {item} out of range for {n} items")));
            }
        }
        if q.u == q.v {
            return Err(ServiceError::Validation(format!("query compares item {} with itself", q.u)));
        }
        let pending = match self.pending()? {
            Step::Query(p) => p.query,
            Step::Done => return Err(ServiceError::NotActive("session is resolved".into())),
            Step::Escalated(why) => return Err(ServiceError::Escalated(why)),
        };
        self.prune();
        let outstanding = pending.same_pair(q) || self.assignments.values().any(|a| a.same_pair(q));
        if !outstanding {
            return Err(ServiceError::StaleQuery(format!("({}, {}) is not an outstanding query", q.u, q.v)));
        }
        let before = self.log().len();
        let report = self.engine.submit(q, positive).map_err(|e| match e {
            CoreError::Invalid(m) => ServiceError::StaleQuery(m),
            other => other.into(),
        })?;
        let appended = self.log().answers()[before..].to_vec();
        self.assignments.retain(|_, a| !a.same_pair(q));
        self.prune();
        let status = self.status();
        let mut repair_query = None;
        if status == Status::Repairing {
            if let Step::Query(p) = self.pending()? {
                self.assignments.retain(|_, a| !a.same_pair(p.query));
                self.assignments.insert(token.to_string(), p.query);
                repair_query = Some(self.query_view(p.query, p.kind));
            }
        }
        Ok(SubmitOutcome {
            response: SubmitResponse {
                answer: report.answer,
                delta: report.delta,
                corrections: report.corrections,
                status,
                repair_query,
            },
            appended,
        })
    }

    fn blocks(&self) -> Vec<(String, Vec<usize>)> {
        self.engine
            .partition()
            .blocks()
            .iter()
            .map(|b| {
                let min = *b.iter().min().expect("blocks are non-empty");
                (self.meta.items[min].id.clone(), b.clone())
            })
            .collect()
    }

    pub fn view(&mut self) -> SessionView {
        let escalation = match self.engine.next() {
            Ok(Step::Escalated(why)) => Some(why),
            _ => None,
        };
        let status = self.status();
        let answered = self.log().len();
        let remaining = if status == Status::Resolved {
            0.0
        } else {
            (self.expected_total - answered as f64).max(0.0)
        };
        SessionView {
            id: self.meta.id.clone(),
            status,
            n: self.n(),
            strategy: self.meta.strategy.clone(),
            plan: self.meta.plan,
            answered,
            counts: self.engine.counts(),
            flips: self.engine.flips(),
            outstanding: self.outstanding().len(),
            blocks: self
                .blocks()
                .into_iter()
                .map(|(key, members)| BlockView {
                    key,
                    members: members.iter().map(|&i| self.meta.items[i].id.clone()).collect(),
                })
                .collect(),
            estimate: Estimate {
                expected_total: self.expected_total,
                estimated_remaining: remaining,
                exact: self.exact_hint,
            },
            labeled: self.labels.is_some(),
            escalation,
        }
    }

    /// Checks `labels` against the resolved blocks and stores them.
    pub fn set_labels(&mut self, labels: BTreeMap<String, String>) -> ServiceResult<Export> {
        if self.status() != Status::Resolved {
            return Err(ServiceError::NotResolved);
        }
        if self.labels.is_some() {
            return Err(ServiceError::AlreadyLabeled);
        }
        let blocks = self.blocks();
        for key in labels.keys() {
            if !blocks.iter().any(|(k, _)| k == key) {
                return Err(ServiceError::Validation(format!("`{key}` is not a block key")));
            }
        }
        let mut clean = BTreeMap::new();
        for (key, _) in &blocks {
            match labels.get(key).map(|l| l.trim()) {
                None => return Err(ServiceError::Validation(format!("missing label for block `{key}`"))),
                Some("") => return Err(ServiceError::Validation(format!("empty label for block `{key}`"))),
                Some(l) => {
                    clean.insert(key.clone(), l.to_string());
                }
            }
        }
        self.labels = Some(clean);
        self.export()
    }

    pub fn export(&self) -> ServiceResult<Export> {
        if self.status() != Status::Resolved {
            return Err(ServiceError::NotResolved);
        }
        let labels = self.labels.as_ref().ok_or(ServiceError::NotLabeled)?;
        let blocks = self.blocks();
        let mut item_label = vec![String::new(); self.n()];
        let mut out_blocks = Vec::with_capacity(blocks.len());
        for (key, members) in blocks {
            let label = labels[&key].clone();
            for &i in &members {
                item_label[i] = label.clone();
            }
            out_blocks.push(ExportBlock {
                key,
                label,
                members: members.iter().map(|&i| self.meta.items[i].id.clone()).collect(),
            });
        }
        Ok(Export {
            session: self.meta.id.clone(),
            strategy: self.meta.strategy.clone(),
            plan: self.meta.plan,
            seed: self.meta.seed,
            items: self
                .meta
                .items
                .iter()
                .zip(item_label)
                .map(|(it, label)| ExportItem {
                    id: it.id.clone(),
                    payload: it.payload.clone(),
                    label,
                })
                .collect(),
            blocks: out_blocks,
            log: self.log().answers().to_vec(),
        })
    }
}
