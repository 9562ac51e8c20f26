//! Active clustering with pairwise same-class queries.
//!
//! The crate holds the partition data model and aggregated-graph knowledge
//! state, ground-truth generators and oracles, query strategies, the exact
//! complexity distribution, noisy-answer repair and the experiment harness.

pub mod bitset;
pub mod dsu;
pub mod error;
pub mod exact;
pub mod graph;
pub mod harness;
pub mod noise;
pub mod oracle;
pub mod partition;
pub mod rng;
pub mod stats;
pub mod strategy;

pub use error::{Error, Result};
pub use graph::{AggregatedGraph, Applied, EXHAUSTIVE_LIMIT};
pub use oracle::{CategoricalModel, ModelSpec, NoiseModel, Oracle};
pub use partition::{all_partitions, Answer, Partition, Query, QueryLog};
pub use rng::{stream_rng, SimRng};
pub use strategy::{make_strategy, run, RunOptions, RunStats, Strategy, StrategyKind};
