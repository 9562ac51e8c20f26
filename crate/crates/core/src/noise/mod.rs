//! Wrong answers: detection, repair and redundant query design.

pub mod engine;
pub mod planner;
pub mod repair;
pub mod robust;
pub mod signed;

pub use engine::{run_robust, Correction, Delta, KindCounts, PlannedQuery, QueryKind, RobustEngine, RobustRun, Status, Step, SubmitReport};
pub use planner::{closure_queries, cross_queries, two_path_lengths, PlanForest, RedundancyPlan, CROSS_TARGET};
pub use repair::{ceil_log2, repair, repair_budget, RepairSession, RepairStep, RepairTranscript};
pub use robust::{
    c2_bound, count_switchable_sets, expected_extra_in_block, min_queries_k_robust, positive_bridges, positive_component_lists,
    verify_k_robust, SWITCHABLE_EDGE_LIMIT,
};
pub use signed::{ContradictoryCycle, SignedEdge, SignedGraph};
