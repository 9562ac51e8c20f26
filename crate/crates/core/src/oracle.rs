//! Ground-truth partition generators and pairwise oracles.

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::partition::{Partition, Query};

/// Fixed class-probability model: each item picks class `i` with probability `p_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoricalModel {
    probs: Vec<f64>,
}

impl CategoricalModel {
    pub const SUM_TOLERANCE: f64 = 1e-12;

    /// Validates the probabilities and stores them in descending order.
    pub fn new(mut probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidModel("no classes".into()));
        }
        if probs.iter().any(|&p| !(p > 0.0 && p.is_finite())) {
            return Err(Error::InvalidModel("class probabilities must be positive".into()));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > Self::SUM_TOLERANCE {
            return Err(Error::InvalidModel(format!(
                "class probabilities sum to {sum}, not 1"
            )));
        }
        probs.sort_by(|a, b| b.partial_cmp(a).expect("finite"));
        Ok(CategoricalModel { probs })
    }

    /// `k` equally likely classes.
    pub fn equal(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidModel("no classes".into()));
        }
        // Spread the rounding residue so the sum check passes for any k.
        let mut probs = vec![1.0 / k as f64; k];
        let residue = 1.0 - probs.iter().sum::<f64>();
        probs[0] += residue;
        Self::new(probs)
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn k(&self) -> usize {
        self.probs.len()
    }

    fn draw_class<R: RngCore + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (i, p) in self.probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return i;
            }
        }
        self.probs.len() - 1
    }
}

/// Independent answer flips with probability `p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub p: f64,
    #[serde(default)]
    pub seed: u64,
}

impl NoiseModel {
    pub fn new(p: f64, seed: u64) -> Result<Self> {
        if !(0.0..1.0).contains(&p) {
            return Err(Error::InvalidModel(format!("flip probability {p} not in [0,1)")));
        }
        Ok(NoiseModel { p, seed })
    }
}

/// Ground-truth model selected in experiment configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum ModelSpec {
    Uniform,
    Categorical { probs: Vec<f64> },
}

impl ModelSpec {
    pub fn sampler(&self, n: usize) -> Result<TruthSampler> {
        match self {
            ModelSpec::Uniform => Ok(TruthSampler::Uniform(UniformPartitionSampler::new(n)?)),
            ModelSpec::Categorical { probs } => Ok(TruthSampler::Categorical {
                n,
                model: CategoricalModel::new(probs.clone())?,
            }),
        }
    }
}

/// A ready-to-draw ground-truth generator.
#[derive(Debug, Clone)]
pub enum TruthSampler {
    Uniform(UniformPartitionSampler),
    Categorical { n: usize, model: CategoricalModel },
}

impl TruthSampler {
    pub fn sample<R: RngCore + ?Sized>(&self, rng: &mut R) -> Partition {
        match self {
            TruthSampler::Uniform(s) => s.sample(rng),
            TruthSampler::Categorical { n, model } => {
                sample_categorical_partition(*n, model, rng).partition
            }
        }
    }
}

/// Exact uniform sampler over the partitions of `0..n`.
///
/// Draws an urn count `m` with probability `m^n / (e * m! * B_n)`, throws
/// every item into a uniformly chosen urn and drops the empty urns.
#[derive(Debug, Clone)]
pub struct UniformPartitionSampler {
    n: usize,
    // cdf[i] is the cumulative probability of urn count i + 1.
    cdf: Vec<f64>,
    log_mass: f64,
}

impl UniformPartitionSampler {
    /// Relative tail threshold at which the urn-count series is cut.
    pub const TAIL: f64 = 1e-18;

    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyGround);
        }
        let nf = n as f64;
        let mut log_weights = Vec::new();
        let mut log_fact = 0.0;
        let mut max = f64::NEG_INFINITY;
        let mut mass = 0.0; // sum of exp(lw - max)
        let mut m = 1usize;
        loop {
            log_fact += (m as f64).ln();
            let lw = nf * (m as f64).ln() - log_fact;
            if lw > max {
                mass = mass * (max - lw).exp() + 1.0;
                max = lw;
            } else {
                mass += (lw - max).exp();
            }
            log_weights.push(lw);
            // Terms decrease once m passes n; stop when negligible.
            if m > n && lw < max + mass.ln() + Self::TAIL.ln() {
                break;
            }
            m += 1;
        }
        let mut cdf = Vec::with_capacity(log_weights.len());
        let mut acc = 0.0;
        for lw in &log_weights {
            acc += (lw - max).exp() / mass;
            cdf.push(acc);
        }
        let log_mass = max + mass.ln();
        Ok(UniformPartitionSampler { n, cdf, log_mass })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Largest urn count kept after truncation.
    pub fn max_urns(&self) -> usize {
        self.cdf.len()
    }

    /// Natural log of the truncated series `sum_m m^n / m!`, which equals `e * B_n`.
    pub fn log_series_mass(&self) -> f64 {
        self.log_mass
    }

    pub fn sample<R: RngCore + ?Sized>(&self, rng: &mut R) -> Partition {
        let u: f64 = rng.random();
        let idx = self.cdf.partition_point(|&c| c <= u).min(self.cdf.len() - 1);
        let urns = idx + 1;
        let labels: Vec<usize> = (0..self.n).map(|_| rng.random_range(0..urns)).collect();
        Partition::from_labels(&labels)
    }
}

pub fn sample_uniform_partition<R: RngCore + ?Sized>(n: usize, rng: &mut R) -> Result<Partition> {
    Ok(UniformPartitionSampler::new(n)?.sample(rng))
}

/// A categorical draw: the realized partition plus each item's class.
#[derive(Debug, Clone)]
pub struct CategoricalSample {
    pub partition: Partition,
    pub class_of: Vec<usize>,
    /// Number of classes in the model, including classes that drew no item.
    pub intended_k: usize,
}

pub fn sample_categorical_partition<R: RngCore + ?Sized>(
    n: usize,
    model: &CategoricalModel,
    rng: &mut R,
) -> CategoricalSample {
    let class_of: Vec<usize> = (0..n).map(|_| model.draw_class(rng)).collect();
    CategoricalSample {
        partition: Partition::from_labels(&class_of),
        class_of,
        intended_k: model.k(),
    }
}

/// True iff `q.u` and `q.v` share a block of `truth`.
pub fn oracle_answer(truth: &Partition, q: Query) -> bool {
    truth.same_block(q.u, q.v)
}

/// The true answer, flipped with probability `noise.p`.
pub fn noisy_answer<R: RngCore + ?Sized>(
    truth: &Partition,
    q: Query,
    noise: &NoiseModel,
    rng: &mut R,
) -> bool {
    let truthful = oracle_answer(truth, q);
    if noise.p > 0.0 && rng.random_bool(noise.p) {
        !truthful
    } else {
        truthful
    }
}

/// Anything that answers pairwise queries.
pub trait Oracle {
    fn answer(&mut self, q: Query) -> bool;
}

/// Answers from a known partition.
#[derive(Debug, Clone, Copy)]
pub struct TruthOracle<'a> {
    pub truth: &'a Partition,
}

impl Oracle for TruthOracle<'_> {
    fn answer(&mut self, q: Query) -> bool {
        oracle_answer(self.truth, q)
    }
}

/// Answers from a known partition with independent flips.
pub struct NoisyOracle<'a, R> {
    pub truth: &'a Partition,
    pub noise: NoiseModel,
    pub rng: R,
    pub flips: usize,
}

impl<'a, R: RngCore> NoisyOracle<'a, R> {
    pub fn new(truth: &'a Partition, noise: NoiseModel, rng: R) -> Self {
        NoisyOracle {
            truth,
            noise,
            rng,
            flips: 0,
        }
    }
}

impl<R: RngCore> Oracle for NoisyOracle<'_, R> {
    fn answer(&mut self, q: Query) -> bool {
        let a = noisy_answer(self.truth, q, &self.noise, &mut self.rng);
        if a != oracle_answer(self.truth, q) {
            self.flips += 1;
        }
        a
    }
}

impl<F: FnMut(Query) -> bool> Oracle for F {
    fn answer(&mut self, q: Query) -> bool {
        self(q)
    }
}
