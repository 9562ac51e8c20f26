//! Shared fixtures for the benchmarks.

use acluster_core::oracle::{sample_categorical_partition, UniformPartitionSampler};
use acluster_core::{stream_rng, CategoricalModel, Partition};

/// A uniformly random partition of `n` items.
pub fn uniform_truth(n: usize, seed: u64) -> Partition {
    UniformPartitionSampler::new(n).expect("n >= 1").sample(&mut stream_rng(seed, 0))
}

/// A partition drawn from the categorical model with `probs`.
pub fn categorical_truth(probs: &[f64], n: usize, seed: u64) -> Partition {
    let model = CategoricalModel::new(probs.to_vec()).expect("valid probabilities");
    sample_categorical_partition(n, &model, &mut stream_rng(seed, 0)).partition
}
